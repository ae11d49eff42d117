//! Building blocks of the selector networks and their backward passes.

use nalgebra::DMatrix;
use rand::Rng;

use crate::graph::Graph;

/// Sparse `D^{-1/2} (A + I) D^{-1/2}` with `D` the degree including the
/// self-loop. The operator is symmetric, so it is its own adjoint.
#[derive(Debug, Clone)]
pub struct Propagation {
    self_w: Vec<f64>,
    nbrs: Vec<Vec<(usize, f64)>>,
}

impl Propagation {
    pub fn new(g: &Graph) -> Self {
        let d: Vec<f64> = (0..g.n()).map(|i| g.degree(i) + 1.0).collect();
        let self_w = d.iter().map(|&di| 1.0 / di).collect();
        let nbrs =
            (0..g.n()).map(|i| g.neighbors(i).iter().map(|&(j, w)| (j, w / (d[i] * d[j]).sqrt())).collect()).collect();
        Self { self_w, nbrs }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for (i, nb) in self.nbrs.iter().enumerate() {
                let mut v = self.self_w[i] * col[i];
                for &(j, w) in nb {
                    v += w * col[j];
                }
                out[(i, c)] = v;
            }
        }
        out
    }
}

pub fn relu(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v.max(0.0))
}

/// Zeroes the upstream gradient where the pre-activation was not positive.
pub fn relu_backward(pre: &DMatrix<f64>, upstream: &DMatrix<f64>) -> DMatrix<f64> {
    pre.zip_map(upstream, |p, u| if p > 0.0 { u } else { 0.0 })
}

/// `ReLU(Â X W)`.
pub fn propagate(g: &Graph, x: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    relu(&(Propagation::new(g).apply(x) * w))
}

pub fn softmax_rows(z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = z.clone();
    for mut row in s.row_iter_mut() {
        let m = row.max();
        row.apply(|v| *v = (*v - m).exp());
        let total = row.sum();
        row /= total;
    }
    s
}

/// Given `s = softmax(z)` row-wise and `dL/ds`, returns `dL/dz`.
pub fn softmax_rows_backward(s: &DMatrix<f64>, ds: &DMatrix<f64>) -> DMatrix<f64> {
    let mut dz = DMatrix::zeros(s.nrows(), s.ncols());
    for r in 0..s.nrows() {
        let dot = s.row(r).dot(&ds.row(r));
        for c in 0..s.ncols() {
            dz[(r, c)] = s[(r, c)] * (ds[(r, c)] - dot);
        }
    }
    dz
}

/// Adds the `1 x C` row `b` to every row of `m`.
pub fn add_row(mut m: DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        row += b;
    }
    m
}

pub fn column_sums(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(1, m.ncols(), |_, c| m.column(c).sum())
}

/// Uniform on `[-a, a]` with `a = sqrt(6 / (rows + cols))`.
pub fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let a = (6.0 / (rows + cols).max(1) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-a..=a))
}
