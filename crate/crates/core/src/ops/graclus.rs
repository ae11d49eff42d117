//! Greedy heavy-edge matching.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::pooling::{contract, zero_diagonal, KPolicy, OperatorDescriptor, PoolError, PoolingOperator, SelectOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisitOrder {
    Ascending,
    Shuffled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraclusReduce {
    /// Average of the features in each cluster.
    Mean,
    /// `S^T X`.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraclusConnect {
    /// `C = S^T A S` rescaled by `c_k^{-1/2} c_l^{-1/2}`, where `c` are the
    /// row sums of `C` (intra-cluster weight included); diagonal dropped.
    Normalized,
    /// `S^T A S` with the diagonal dropped: total crossing weight.
    Contracted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraclusConfig {
    pub order: VisitOrder,
    pub reduce: GraclusReduce,
    pub connect: GraclusConnect,
}

impl Default for GraclusConfig {
    fn default() -> Self {
        Self { order: VisitOrder::Ascending, reduce: GraclusReduce::Mean, connect: GraclusConnect::Normalized }
    }
}

/// Cluster label of every node. Unmatched nodes visit their unmatched
/// neighbours and pair with the one maximising `w/d_i + w/d_j`; ties go to
/// the lower index. Labels are assigned in visiting order.
pub fn graclus_matching(g: &Graph, order: VisitOrder) -> (Vec<usize>, usize) {
    let n = g.n();
    let mut visit: Vec<usize> = (0..n).collect();
    if let VisitOrder::Shuffled(seed) = order {
        visit.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let deg = g.degrees();
    let mut label = vec![usize::MAX; n];
    let mut k = 0;
    for &i in &visit {
        if label[i] != usize::MAX {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for &(j, w) in g.neighbors(i) {
            if label[j] != usize::MAX {
                continue;
            }
            let score = w / deg[i] + w / deg[j];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        label[i] = k;
        if let Some((j, _)) = best {
            label[j] = k;
        }
        k += 1;
    }
    (label, k)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Graclus {
    pub config: GraclusConfig,
}

impl Graclus {
    pub fn new(config: GraclusConfig) -> Self {
        Self { config }
    }
}

impl PoolingOperator for Graclus {
    fn id(&self) -> &str {
        "graclus"
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor { trainable: false, dense: false, fixed: false, hierarchical: true, k_policy: KPolicy::Auto }
    }

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        let (labels, k) = graclus_matching(g, self.config.order);
        SelectOutput::from_labels(&labels, k)
    }

    fn reduce(&self, g: &Graph, sel: &SelectOutput) -> Result<DMatrix<f64>, PoolError> {
        let mut x = sel.transpose_mul(g.features());
        if self.config.reduce == GraclusReduce::Mean {
            for (k, &size) in sel.support_sizes().iter().enumerate() {
                if size > 0 {
                    x.row_mut(k).scale_mut(1.0 / size as f64);
                }
            }
        }
        Ok(x)
    }

    fn connect(&self, g: &Graph, sel: &SelectOutput) -> Result<DMatrix<f64>, PoolError> {
        let c = contract(g, sel);
        if self.config.connect == GraclusConnect::Contracted {
            return Ok(zero_diagonal(c));
        }
        let d: Vec<f64> = c.row_iter().map(|r| r.sum()).collect();
        let out = DMatrix::from_fn(c.nrows(), c.ncols(), |k, l| {
            if k == l || d[k] <= 0.0 || d[l] <= 0.0 {
                0.0
            } else {
                c[(k, l)] / (d[k] * d[l]).sqrt()
            }
        });
        Ok(out)
    }
}
