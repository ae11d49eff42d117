//! Attribute and structure preservation measures.

use nalgebra::DMatrix;

use crate::graph::{laplacian_of, Graph, LaplacianKind};
use crate::linalg::{eigh_range, eigvalsh, Which};
use crate::pooling::{zero_diagonal, PoolError, PooledGraph};
use crate::trainable::SpectralLoss;

/// Number of Laplacian eigenvectors in the spectral test signal.
pub const SIGNAL_EIGENVECTORS: usize = 10;

/// Mean squared feature distance between adjacent nodes, per feature.
/// Each undirected edge counts in both directions, which leaves the ratio
/// unchanged.
pub fn gamma_baseline(g: &Graph) -> Result<f64, PoolError> {
    let x = g.features();
    if x.ncols() == 0 {
        return Err(PoolError::Config("gamma needs node features".into()));
    }
    if g.num_edges() == 0 {
        return Err(PoolError::Config("gamma needs at least one edge".into()));
    }
    let total: f64 = g.edges().iter().map(|e| (x.row(e.i) - x.row(e.j)).norm_squared()).sum();
    Ok(total / (g.num_edges() * x.ncols()) as f64)
}

/// The first eigenvectors of the combinatorial Laplacian followed by the
/// node coordinates (when present), every column scaled to unit norm.
pub fn spectral_signal(g: &Graph) -> Result<DMatrix<f64>, PoolError> {
    let n = g.n();
    let m = SIGNAL_EIGENVECTORS.min(n);
    let eig = eigh_range(&g.laplacian(LaplacianKind::Combinatorial), Which::Smallest(m))?;
    let extra = g.coords().map_or(0, |c| c.ncols());
    let mut x = DMatrix::zeros(n, m + extra);
    x.columns_mut(0, m).copy_from(&eig.vectors);
    if let Some(c) = g.coords() {
        x.columns_mut(m, extra).copy_from(c);
    }
    for mut col in x.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    Ok(x)
}

/// Mean over columns of `|x^T L x - x'^T L' x'|`, where `signal` holds the
/// columns `x` and `pooled` was produced from a graph carrying `signal` as
/// features.
pub fn quadratic_loss(g: &Graph, signal: &DMatrix<f64>, pooled: &PooledGraph) -> f64 {
    SpectralLoss::new(g, signal).value(&pooled.a_pooled, &pooled.x_pooled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureStats {
    /// Nonzero off-diagonal entries of `A'` over `K^2`.
    pub edge_density: f64,
    /// Median weight of the edges; `None` without edges.
    pub median_weight: Option<f64>,
}

pub fn structure_stats(a: &DMatrix<f64>) -> StructureStats {
    let k = a.nrows();
    let mut weights = Vec::new();
    for j in 0..k {
        for i in 0..j {
            let w = 0.5 * (a[(i, j)] + a[(j, i)]);
            if w != 0.0 {
                weights.push(w);
            }
        }
    }
    let edge_density = if k == 0 { 0.0 } else { 2.0 * weights.len() as f64 / (k * k) as f64 };
    weights.sort_by(f64::total_cmp);
    let median_weight = match weights.len() {
        0 => None,
        m if m % 2 == 1 => Some(weights[m / 2]),
        m => Some(0.5 * (weights[m / 2 - 1] + weights[m / 2])),
    };
    StructureStats { edge_density, median_weight }
}

/// Adjacency of `g` as a dense matrix, for [`structure_stats`] on an unpooled graph.
pub fn graph_structure(g: &Graph) -> StructureStats {
    structure_stats(&g.adjacency())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPair {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

/// Eigenvalues of the symmetric normalised Laplacian of `g` and of the
/// pooled graph (diagonal of `A'` ignored).
pub fn spectrum_alignment(g: &Graph, pooled: &PooledGraph) -> Result<SpectrumPair, PoolError> {
    let before = eigvalsh(&g.laplacian(LaplacianKind::SymNormalized))?;
    let a = zero_diagonal(pooled.a_pooled.clone());
    let a = (&a + a.transpose()) * 0.5;
    let after = eigvalsh(&laplacian_of(&a, LaplacianKind::SymNormalized))?;
    Ok(SpectrumPair { before, after })
}

/// Positions `0, 1/(m-1), ..., 1` for plotting `m` eigenvalues on a shared axis.
pub fn rescaled_indices(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
    }
}

/// Least-squares slope of `ln y` against `ln x`. Needs two distinct
/// positive abscissae; nonpositive points are skipped.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid2d, build_ring};
    use crate::ops::Identity;
    use crate::pooling::pool;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_reference_values() {
        assert_abs_diff_eq!(gamma_baseline(&build_grid2d(8, 8).unwrap()).unwrap(), 7.812e-3, epsilon = 1e-5);
        assert_abs_diff_eq!(gamma_baseline(&build_ring(64).unwrap()).unwrap(), 4.815e-3, epsilon = 1e-5);
        let twin = Graph::new(DMatrix::from_element(2, 2, 0.3), [(0, 1, 1.0)], None).unwrap();
        assert_eq!(gamma_baseline(&twin).unwrap(), 0.0);
    }

    #[test]
    fn gamma_needs_features_and_edges() {
        let g = Graph::new(DMatrix::zeros(3, 0), [(0, 1, 1.0)], None).unwrap();
        assert!(gamma_baseline(&g).is_err());
        let g = Graph::new(DMatrix::zeros(3, 1), [], None).unwrap();
        assert!(gamma_baseline(&g).is_err());
    }

    #[test]
    fn signal_columns_are_unit() {
        let g = build_grid2d(4, 4).unwrap();
        let x = spectral_signal(&g).unwrap();
        assert_eq!(x.shape(), (16, 12));
        for c in x.column_iter() {
            assert_abs_diff_eq!(c.norm(), 1.0, epsilon = 1e-12);
        }
        let small = build_ring(5).unwrap();
        assert_eq!(spectral_signal(&small).unwrap().ncols(), 7);
    }

    #[test]
    fn identity_pool_has_zero_loss_and_equal_spectra() {
        let g = build_grid2d(5, 4).unwrap();
        let x = spectral_signal(&g).unwrap();
        let gs = g.with_features(x.clone()).unwrap();
        let p = pool(&gs, &Identity).unwrap();
        assert_abs_diff_eq!(quadratic_loss(&g, &x, &p), 0.0, epsilon = 1e-12);
        let sp = spectrum_alignment(&g, &p).unwrap();
        for (a, b) in sp.before.iter().zip(&sp.after) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn ring4_normalised_spectrum() {
        let g = build_ring(4).unwrap();
        let p = pool(&g, &Identity).unwrap();
        let sp = spectrum_alignment(&g, &p).unwrap();
        for (v, want) in sp.before.iter().zip([0.0, 1.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(*v, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_structure() {
        let s = graph_structure(&build_grid2d(8, 8).unwrap());
        assert_abs_diff_eq!(s.edge_density, 0.055, epsilon = 0.002);
        assert_eq!(s.median_weight, Some(1.0));
    }

    #[test]
    fn complete_graph_density() {
        let k = 5;
        let mut a = DMatrix::from_element(k, k, 2.0);
        a.fill_diagonal(0.0);
        let s = structure_stats(&a);
        assert_abs_diff_eq!(s.edge_density, (k * k - k) as f64 / (k * k) as f64, epsilon = 1e-15);
        assert_eq!(s.median_weight, Some(2.0));
        assert_eq!(structure_stats(&DMatrix::zeros(1, 1)).median_weight, None);
    }

    #[test]
    fn slopes() {
        let quad: Vec<_> = [1000.0, 2000.0, 4000.0].iter().map(|&n: &f64| (n, n * n / 2.0)).collect();
        assert_abs_diff_eq!(fit_loglog_slope(&quad).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(fit_loglog_slope(&[(10.0, 3.0)]), None);
        assert_eq!(fit_loglog_slope(&[(10.0, 3.0), (10.0, 4.0)]), None);
        assert_eq!(rescaled_indices(3), vec![0.0, 0.5, 1.0]);
    }
}
