//! Laplacian pooling: leaders are strict local maxima of `||LX||`, and every
//! node is softly assigned to leaders by a sparsemax over cosine similarity.

use nalgebra::DMatrix;

use crate::graph::{Graph, LaplacianKind};
use crate::linalg::sparsemax;
use crate::pooling::{KPolicy, OperatorDescriptor, PoolError, PoolingOperator, SelectOutput};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    L1,
    L2,
    Inf,
}

impl NormOrder {
    fn apply(self, row: impl Iterator<Item = f64>) -> f64 {
        match self {
            NormOrder::L1 => row.map(f64::abs).sum(),
            NormOrder::L2 => row.map(|v| v * v).sum::<f64>().sqrt(),
            NormOrder::Inf => row.map(f64::abs).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaPoolConfig {
    pub beta: f64,
    pub norm_order: NormOrder,
    pub laplacian: LaplacianKind,
}

impl Default for LaPoolConfig {
    fn default() -> Self {
        Self { beta: 1.0, norm_order: NormOrder::L2, laplacian: LaplacianKind::Combinatorial }
    }
}

/// Nodes whose score strictly exceeds that of every neighbour.
pub fn lapool_leaders(g: &Graph, v: &[f64]) -> Vec<usize> {
    (0..g.n()).filter(|&i| g.neighbors(i).iter().all(|&(j, _)| v[i] > v[j])).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LaPool {
    pub config: LaPoolConfig,
}

impl LaPool {
    pub fn new(config: LaPoolConfig) -> Result<Self, PoolError> {
        if !(config.beta.is_finite() && config.beta > 0.0) {
            return Err(PoolError::Config(format!("lapool beta must be finite and > 0, got {}", config.beta)));
        }
        Ok(Self { config })
    }

    /// `V_i = ||(LX)_i||`.
    pub fn scores(&self, g: &Graph) -> Vec<f64> {
        let lx = g.laplacian(self.config.laplacian) * g.features();
        lx.row_iter().map(|r| self.config.norm_order.apply(r.iter().copied())).collect()
    }
}

impl PoolingOperator for LaPool {
    fn id(&self) -> &str {
        "lapool"
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor { trainable: false, dense: true, fixed: false, hierarchical: true, k_policy: KPolicy::Auto }
    }

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        if g.num_features() == 0 {
            return Err(PoolError::Config("lapool needs node features".into()));
        }
        let v = self.scores(g);
        let leaders = lapool_leaders(g, &v);
        if leaders.is_empty() || v.iter().all(|&s| s == 0.0) {
            return Err(PoolError::Degenerate("lapool".into()));
        }
        let x = g.features();
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        let mut s = DMatrix::zeros(g.n(), leaders.len());
        for i in 0..g.n() {
            let sims: Vec<f64> = leaders.iter().map(|&l| self.config.beta * cosine(&rows[i], &rows[l])).collect();
            for (k, p) in sparsemax(&sims).into_iter().enumerate() {
                s[(i, k)] = p;
            }
        }
        SelectOutput::dense(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> Graph {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        Graph::new(x, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], None).unwrap()
    }

    #[test]
    fn star_centre_is_sole_leader() {
        let op = LaPool::default();
        let s = op.select(&star()).unwrap();
        assert_eq!(s.k(), 1);
        assert_eq!(lapool_leaders(&star(), &op.scores(&star())), vec![0]);
    }

    #[test]
    fn constant_features_are_degenerate() {
        let g = Graph::new(DMatrix::from_element(3, 2, 0.7), [(0, 1, 1.0), (1, 2, 1.0)], None).unwrap();
        assert!(matches!(LaPool::default().select(&g), Err(PoolError::Degenerate(_))));
    }

    #[test]
    fn rows_sum_to_one() {
        let g = crate::graph::build_sensor(30, 5).unwrap();
        let s = LaPool::default().select(&g).unwrap().matrix();
        for r in s.row_iter() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
            assert!(r.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn leaders_ignore_constant_shift() {
        let g = crate::graph::build_sensor(20, 1).unwrap();
        let v = LaPool::default().scores(&g);
        let shifted: Vec<f64> = v.iter().map(|x| x + 123.0).collect();
        assert_eq!(lapool_leaders(&g, &v), lapool_leaders(&g, &shifted));
    }

    #[test]
    fn zero_vector_cosine_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        assert!((cosine(&[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_beta() {
        let bad = LaPoolConfig { beta: f64::NAN, ..Default::default() };
        assert!(LaPool::new(bad).is_err());
        assert!(LaPool::new(LaPoolConfig { beta: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn norm_orders() {
        let r = [3.0, -4.0];
        assert_eq!(NormOrder::L1.apply(r.iter().copied()), 7.0);
        assert_eq!(NormOrder::L2.apply(r.iter().copied()), 5.0);
        assert_eq!(NormOrder::Inf.apply(r.iter().copied()), 4.0);
    }
}
