//! Training objectives and auxiliary regularisers, each returning the
//! gradient with respect to its matrix inputs.

use nalgebra::DMatrix;

use crate::graph::{Graph, LaplacianKind};
use crate::linalg::pseudo_inverse;

/// `x_c^T L x_c` for every column, with `L` the combinatorial Laplacian of
/// the weighted adjacency `a`. The diagonal of `a` does not contribute.
pub fn quad_forms(a: &DMatrix<f64>, x: &DMatrix<f64>) -> Vec<f64> {
    let k = a.nrows();
    (0..x.ncols())
        .map(|c| {
            let col = x.column(c);
            let mut q = 0.0;
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        q += a[(i, j)] * col[i] * (col[i] - col[j]);
                    }
                }
            }
            q
        })
        .collect()
}

/// Mean over signal columns of `|x_c^T L x_c - x'_c^T L' x'_c|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLoss {
    reference: Vec<f64>,
}

impl SpectralLoss {
    /// `signal` must be the feature matrix the pooled signal is derived from.
    pub fn new(g: &Graph, signal: &DMatrix<f64>) -> Self {
        let l = g.laplacian(LaplacianKind::Combinatorial);
        let reference = (0..signal.ncols())
            .map(|c| {
                let x = signal.column(c);
                x.dot(&(&l * x))
            })
            .collect();
        Self { reference }
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn value(&self, a_pooled: &DMatrix<f64>, x_pooled: &DMatrix<f64>) -> f64 {
        let q = quad_forms(a_pooled, x_pooled);
        let c = self.reference.len().max(1) as f64;
        self.reference.iter().zip(&q).map(|(r, q)| (r - q).abs()).sum::<f64>() / c
    }

    /// Loss with `dL/dA'` and `dL/dX'`.
    pub fn value_and_grad(
        &self,
        a_pooled: &DMatrix<f64>,
        x_pooled: &DMatrix<f64>,
    ) -> (f64, DMatrix<f64>, DMatrix<f64>) {
        let q = quad_forms(a_pooled, x_pooled);
        let cols = self.reference.len().max(1) as f64;
        let loss = self.reference.iter().zip(&q).map(|(r, q)| (r - q).abs()).sum::<f64>() / cols;
        // d|r - q|/dq = -sign(r - q)
        let gsign: Vec<f64> = self
            .reference
            .iter()
            .zip(&q)
            .map(|(r, q)| {
                let d = r - q;
                if d > 0.0 {
                    -1.0 / cols
                } else if d < 0.0 {
                    1.0 / cols
                } else {
                    0.0
                }
            })
            .collect();
        let k = a_pooled.nrows();
        // dq_c/da_kl = x_k^2 - x_k x_l
        let mut da = DMatrix::zeros(k, k);
        for (c, &gc) in gsign.iter().enumerate() {
            if gc == 0.0 {
                continue;
            }
            let x = x_pooled.column(c);
            for l in 0..k {
                for kk in 0..k {
                    da[(kk, l)] += gc * (x[kk] * x[kk] - x[kk] * x[l]);
                }
            }
        }
        for i in 0..k {
            da[(i, i)] = 0.0;
        }
        // dq_c/dx = 2 L' x
        let deg: Vec<f64> = (0..k).map(|i| (0..k).filter(|&j| j != i).map(|j| a_pooled[(i, j)]).sum()).collect();
        let mut dx = DMatrix::zeros(k, x_pooled.ncols());
        for (c, &gc) in gsign.iter().enumerate() {
            if gc == 0.0 {
                continue;
            }
            let x = x_pooled.column(c);
            for i in 0..k {
                let mut lx = deg[i] * x[i];
                for j in 0..k {
                    if j != i {
                        lx -= a_pooled[(i, j)] * x[j];
                    }
                }
                dx[(i, c)] = 2.0 * gc * lx;
            }
        }
        (loss, da, dx)
    }
}

/// Autoencoder objective: lift the pooled features with `U = (R^+)^T`,
/// apply a one-hop graph layer `[X_up, P X_up, 1] Theta` (with `P` the
/// row-normalised adjacency and `Theta` fitted by least squares), and
/// compare with the target features.
#[derive(Debug, Clone)]
pub struct ReconTarget {
    x: DMatrix<f64>,
    mean_agg: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ReconOutput {
    pub mse: f64,
    pub reconstruction: DMatrix<f64>,
    /// `dL/dR` and `dL/dX'` when requested.
    pub grads: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl ReconTarget {
    pub fn new(g: &Graph, target: &DMatrix<f64>) -> Self {
        let n = g.n();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            let d = g.degree(i);
            if d > 0.0 {
                for &(j, w) in g.neighbors(i) {
                    p[(i, j)] = w / d;
                }
            }
        }
        Self { x: target.clone(), mean_agg: p }
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `r` is the `N x K` selection used for lifting, `x_pooled` is `K x F'`.
    pub fn evaluate(&self, r: &DMatrix<f64>, x_pooled: &DMatrix<f64>, want_grad: bool) -> ReconOutput {
        let (n, f) = self.x.shape();
        let fp = x_pooled.ncols();
        let rp = pseudo_inverse(r);
        let x_up = rp.tr_mul(x_pooled);
        let px = &self.mean_agg * &x_up;
        let mut m = DMatrix::zeros(n, 2 * fp + 1);
        m.columns_mut(0, fp).copy_from(&x_up);
        m.columns_mut(fp, fp).copy_from(&px);
        m.column_mut(2 * fp).fill(1.0);
        let theta = pseudo_inverse(&m) * &self.x;
        let out = &m * &theta;
        let res = &out - &self.x;
        let denom = (n * f).max(1) as f64;
        let mse = res.norm_squared() / denom;
        let grads = want_grad.then(|| {
            // Theta is optimal, so it can be held fixed when differentiating.
            let d_out = res * (2.0 / denom);
            let dm = d_out * theta.transpose();
            let dx_up = dm.columns(0, fp) + self.mean_agg.tr_mul(&dm.columns(fp, fp).into_owned());
            let dxp = &rp * &dx_up;
            let mx = x_pooled * dx_up.transpose();
            let k = r.ncols();
            let rpt = rp.transpose();
            let p_col = DMatrix::identity(n, n) - r * &rp;
            let p_row = DMatrix::identity(k, k) - &rp * r;
            let dr = -(&rpt * &mx * &rpt) + p_col * mx.transpose() * &rp * &rpt + &rpt * &rp * mx.transpose() * p_row;
            (dr, dxp)
        });
        ReconOutput { mse, reconstruction: out, grads }
    }
}

/// Cut loss `-Tr(S^T A S) / Tr(S^T D S)` and orthogonality loss
/// `||S^T S / ||S^T S||_F - I / sqrt(K)||_F`, with their summed gradient.
pub fn mincut_aux(g: &Graph, s: &DMatrix<f64>) -> ([f64; 2], DMatrix<f64>) {
    let (n, k) = s.shape();
    let as_ = g.adj_mul(s);
    let deg = g.degrees();
    let mut ds_mat = s.clone();
    for i in 0..n {
        ds_mat.row_mut(i).scale_mut(deg[i]);
    }
    let num = s.component_mul(&as_).sum();
    let den = s.component_mul(&ds_mat).sum();
    let mut grad = DMatrix::zeros(n, k);
    let cut = if den > 0.0 {
        grad += &as_ * (-2.0 / den) + ds_mat * (2.0 * num / (den * den));
        -num / den
    } else {
        0.0
    };
    let mm = s.tr_mul(s);
    let f = mm.norm();
    let ortho = if f > 0.0 {
        let r = &mm / f - DMatrix::identity(k, k) / (k as f64).sqrt();
        let o = r.norm();
        if o > 0.0 {
            let dr = &r / o;
            let dmm = &dr / f - &mm * (mm.dot(&dr) / (f * f * f));
            grad += s * dmm * 2.0;
        }
        o
    } else {
        0.0
    };
    ([cut, ortho], grad)
}

/// Link loss `||A - S S^T||_F / N^2` and mean row entropy of `S`, with
/// their summed gradient.
pub fn diffpool_aux(g: &Graph, s: &DMatrix<f64>) -> ([f64; 2], DMatrix<f64>) {
    let n = s.nrows();
    let nn = (n * n).max(1) as f64;
    let e = g.adjacency() - s * s.transpose();
    let en = e.norm();
    let mut grad = DMatrix::zeros(n, s.ncols());
    if en > 0.0 {
        grad -= &e * s * (2.0 / (en * nn));
    }
    let rows = n.max(1) as f64;
    let mut entropy = 0.0;
    for (idx, &v) in s.iter().enumerate() {
        let c = v.max(f64::MIN_POSITIVE);
        entropy -= v * c.ln();
        grad[idx] -= (c.ln() + 1.0) / rows;
    }
    ([en / nn, entropy / rows], grad)
}
