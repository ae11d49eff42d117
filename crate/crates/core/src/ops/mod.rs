//! Non-trainable operators, plus the identity and global-sum baselines.

mod graclus;
mod lapool;
mod ndp;
mod nmf;

pub use graclus::{graclus_matching, Graclus, GraclusConfig, GraclusConnect, GraclusReduce, VisitOrder};
pub use lapool::{lapool_leaders, LaPool, LaPoolConfig, NormOrder};
pub use ndp::{ndp_keep_set, Ndp};
pub use nmf::{nmf_factorize, Nmf, NmfConfig, NmfFactorization};

use crate::graph::Graph;
use crate::pooling::{KPolicy, OperatorDescriptor, PoolError, PoolingOperator, SelectOutput};

/// `S = I`: the output graph equals the input graph.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl PoolingOperator for Identity {
    fn id(&self) -> &str {
        "identity"
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor { trainable: false, dense: false, fixed: false, hierarchical: true, k_policy: KPolicy::Auto }
    }

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        Ok(SelectOutput::identity(g.n()))
    }
}

/// Sum readout: every node feeds one supernode and no edges remain.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlobalSum;

impl PoolingOperator for GlobalSum {
    fn id(&self) -> &str {
        "global"
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor {
            trainable: false,
            dense: true,
            fixed: true,
            hierarchical: false,
            k_policy: KPolicy::Fixed(1),
        }
    }

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        SelectOutput::from_labels(&vec![0; g.n()], 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_ring;
    use crate::pooling::pool;

    #[test]
    fn global_sum_gives_single_isolated_node() {
        let g = build_ring(5).unwrap();
        let p = pool(&g, &GlobalSum).unwrap();
        assert_eq!(p.k(), 1);
        assert_eq!(p.a_pooled[(0, 0)], 0.0);
        assert_eq!(p.to_graph().unwrap().num_edges(), 0);
        let total: f64 = g.features().column(0).sum();
        assert!((p.x_pooled[(0, 0)] - total).abs() < 1e-12);
        assert!(GlobalSum.descriptor().is_global());
    }
}
