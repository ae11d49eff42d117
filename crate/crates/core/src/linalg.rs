//! Dense numerical kernels: symmetric eigenpairs, Moore-Penrose inverse,
//! Kron reduction and sparsemax.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric (max |M - M^T| = {0:e})")]
    NotSymmetric(f64),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("requested {requested} eigenpairs of a {n}x{n} matrix")]
    TooManyPairs { requested: usize, n: usize },
    #[error("index {index} out of range for {n} rows")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("keep set is empty or has duplicates")]
    BadKeepSet,
}

/// Ascending eigenvalues with unit-norm eigenvectors in the matching columns.
/// The first component of each vector with magnitude above `1e-12` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest(usize),
    Largest(usize),
    All,
}

const SYMMETRY_TOL: f64 = 1e-10;
const SIGN_TOL: f64 = 1e-12;

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(LinalgError::NotSymmetric(worst));
    }
    Ok(())
}

/// Eigenpairs of a symmetric matrix, restricted to the requested end of the
/// spectrum. Values are always returned in ascending order.
pub fn eigh_range(m: &DMatrix<f64>, which: Which) -> Result<EigenPairs, LinalgError> {
    check_symmetric(m)?;
    let n = m.nrows();
    let (lo, count) = match which {
        Which::Smallest(k) => (0, k),
        Which::Largest(k) => (n.saturating_sub(k), k),
        Which::All => (0, n),
    };
    if count > n {
        return Err(LinalgError::TooManyPairs { requested: count, n });
    }
    if n == 0 {
        return Ok(EigenPairs { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) });
    }
    // Solve on the exactly symmetric part so tiny asymmetries do not leak in.
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let picked = &order[lo..lo + count];
    let values = DVector::from_iterator(count, picked.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, count);
    for (c, &i) in picked.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        if let Some(first) = v.iter().find(|x| x.abs() > SIGN_TOL) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(c, &v);
    }
    Ok(EigenPairs { values, vectors })
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigvalsh(m: &DMatrix<f64>) -> Result<Vec<f64>, LinalgError> {
    check_symmetric(m)?;
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Moore-Penrose pseudo-inverse via SVD; singular values below
/// `1e-10 * sigma_max` are treated as zero.
pub fn pseudo_inverse(s: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = s.shape();
    if n == 0 || k == 0 {
        return DMatrix::zeros(k, n);
    }
    let svd = SVD::new(s.clone(), true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return DMatrix::zeros(k, n);
    }
    let cut = 1e-10 * smax;
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let mut out = DMatrix::zeros(k, n);
    for (r, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > cut {
            // out += v_r * u_r^T / sigma
            out.ger(1.0 / sigma, &vt.row(r).transpose(), &u.column(r), 1.0);
        }
    }
    out
}

fn complement(n: usize, keep: &[usize]) -> Result<Vec<usize>, LinalgError> {
    let mut mark = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(LinalgError::IndexOutOfRange { index: k, n });
        }
        if mark[k] {
            return Err(LinalgError::BadKeepSet);
        }
        mark[k] = true;
    }
    Ok((0..n).filter(|&i| !mark[i]).collect())
}

/// Schur complement of a Laplacian onto `keep`:
/// `L_kk - L_kd (L_dd)^+ L_dk`. Rows of the result follow the order of `keep`.
pub fn kron_reduction(l: &DMatrix<f64>, keep: &[usize]) -> Result<DMatrix<f64>, LinalgError> {
    if l.nrows() != l.ncols() {
        return Err(LinalgError::NotSquare(l.nrows(), l.ncols()));
    }
    if keep.is_empty() {
        return Err(LinalgError::BadKeepSet);
    }
    let drop = complement(l.nrows(), keep)?;
    let l_kk = l.select_rows(keep).select_columns(keep);
    if drop.is_empty() {
        return Ok(l_kk);
    }
    let l_kd = l.select_rows(keep).select_columns(&drop);
    let l_dd = l.select_rows(&drop).select_columns(&drop);
    // A grounded Laplacian of a connected graph is positive definite; fall back
    // to the pseudo-inverse when a dropped block is disconnected from `keep`.
    let solved = match l_dd.clone().cholesky() {
        Some(ch) => ch.solve(&l_kd.transpose()),
        None => pseudo_inverse(&l_dd) * l_kd.transpose(),
    };
    let red = l_kk - &l_kd * solved;
    Ok((&red + red.transpose()) * 0.5)
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn sparsemax(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut z = v.to_vec();
    z.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &zk) in z.iter().enumerate() {
        cumsum += zk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if zk > t {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_ring, Graph, LaplacianKind};
    use approx::assert_abs_diff_eq;

    fn path(n: usize) -> Graph {
        Graph::new(DMatrix::zeros(n, 1), (0..n - 1).map(|i| (i, i + 1, 1.0)), None).unwrap()
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigh_range(&m, Which::All), Err(LinalgError::NotSymmetric(_))));
        let r = DMatrix::zeros(2, 3);
        assert_eq!(eigh_range(&r, Which::All), Err(LinalgError::NotSquare(2, 3)));
    }

    #[test]
    fn smallest_of_connected_laplacian_is_constant() {
        let l = path(5).laplacian(LaplacianKind::Combinatorial);
        let e = eigh_range(&l, Which::Smallest(1)).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.0, epsilon = 1e-12);
        for x in e.vectors.column(0).iter() {
            assert_abs_diff_eq!(*x, 1.0 / 5f64.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn ring4_spectrum() {
        let l = build_ring(4).unwrap().laplacian(LaplacianKind::Combinatorial);
        let e = eigh_range(&l, Which::Smallest(4)).unwrap();
        for (got, want) in e.values.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn path2_largest() {
        let l = path(2).laplacian(LaplacianKind::Combinatorial);
        let e = eigh_range(&l, Which::Largest(1)).unwrap();
        assert_abs_diff_eq!(e.values[0], 2.0, epsilon = 1e-12);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(e.vectors[(0, 0)], s, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[(1, 0)], -s, epsilon = 1e-12);
    }

    #[test]
    fn residual_and_sign_invariants() {
        let g = crate::graph::build_sensor(30, 2).unwrap();
        let l = g.laplacian(LaplacianKind::Combinatorial);
        let e = eigh_range(&l, Which::All).unwrap();
        for k in 0..30 {
            let v = e.vectors.column(k);
            let r = &l * v - v * e.values[k];
            assert!(r.amax() <= 1e-8 * e.values[k].abs().max(1.0));
            let first = v.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
        let trace: f64 = l.diagonal().sum();
        assert!((e.values.sum() - trace).abs() <= 1e-8 * l.norm());
    }

    #[test]
    fn pinv_of_orthonormal_is_transpose() {
        let q = DMatrix::from_row_slice(3, 2, &[0.6, 0.0, 0.8, 0.0, 0.0, 1.0]);
        assert!((pseudo_inverse(&q) - q.transpose()).amax() < 1e-14);
    }

    #[test]
    fn pinv_of_clustering() {
        // clusters {0, 1, 2} and {3}
        let s = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let p = pseudo_inverse(&s);
        let want = DMatrix::from_row_slice(2, 4, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((p - want).amax() < 1e-14);
    }

    #[test]
    fn pinv_of_zero() {
        assert_eq!(pseudo_inverse(&DMatrix::zeros(3, 2)), DMatrix::zeros(2, 3));
        assert_eq!(pseudo_inverse(&DMatrix::zeros(0, 2)).shape(), (2, 0));
    }

    #[test]
    fn kron_path3_keep_endpoints() {
        let l = path(3).laplacian(LaplacianKind::Combinatorial);
        let r = kron_reduction(&l, &[0, 2]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!((r - want).amax() < 1e-14);
    }

    #[test]
    fn kron_keep_all_is_identity_map() {
        let l = build_ring(5).unwrap().laplacian(LaplacianKind::Combinatorial);
        assert_eq!(kron_reduction(&l, &[0, 1, 2, 3, 4]).unwrap(), l);
    }

    #[test]
    fn kron_isolated_kept_node_unchanged() {
        // node 3 isolated; drop node 1 of the path 0-1-2
        let g = Graph::new(DMatrix::zeros(4, 1), [(0, 1, 1.0), (1, 2, 1.0)], None).unwrap();
        let l = g.laplacian(LaplacianKind::Combinatorial);
        let r = kron_reduction(&l, &[0, 2, 3]).unwrap();
        assert_eq!(r.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0]);
        assert_eq!(r.column(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn kron_disconnected_dropped_block_uses_pinv() {
        // node 2 isolated and dropped: its grounded block is singular
        let g = Graph::new(DMatrix::zeros(3, 1), [(0, 1, 2.0)], None).unwrap();
        let l = g.laplacian(LaplacianKind::Combinatorial);
        let r = kron_reduction(&l, &[0, 1]).unwrap();
        assert!((r - l.select_rows(&[0, 1]).select_columns(&[0, 1])).amax() < 1e-14);
    }

    #[test]
    fn kron_bad_keep() {
        let l = path(3).laplacian(LaplacianKind::Combinatorial);
        assert_eq!(kron_reduction(&l, &[]), Err(LinalgError::BadKeepSet));
        assert_eq!(kron_reduction(&l, &[0, 0]), Err(LinalgError::BadKeepSet));
        assert_eq!(kron_reduction(&l, &[5]), Err(LinalgError::IndexOutOfRange { index: 5, n: 3 }));
    }

    #[test]
    fn sparsemax_examples() {
        for p in sparsemax(&[0.3, 0.3, 0.3]) {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(sparsemax(&[1.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        let p = sparsemax(&[0.6, 0.4, -10.0]);
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.4, epsilon = 1e-15);
        assert_eq!(p[2], 0.0);
        assert!(sparsemax(&[]).is_empty());
    }
}
