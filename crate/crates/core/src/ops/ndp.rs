//! Node decimation: keep one side of the highest-frequency Laplacian
//! eigenvector and reconnect by Kron reduction.

use nalgebra::DMatrix;

use crate::graph::{Graph, LaplacianKind};
use crate::linalg::{eigh_range, kron_reduction, Which};
use crate::pooling::{KPolicy, OperatorDescriptor, PoolError, PoolingOperator, SelectOutput};

const POSITIVE_TOL: f64 = 1e-12;
const CLEAN_TOL: f64 = 1e-12;

/// Nodes with a positive entry in the top eigenvector of the combinatorial
/// Laplacian, computed per connected component. A component with no
/// positive entry keeps its node with the largest entry. Ascending order.
pub fn ndp_keep_set(g: &Graph) -> Result<Vec<usize>, PoolError> {
    let labels = g.components();
    let ncomp = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); ncomp];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    let mut keep = Vec::new();
    for nodes in members {
        if nodes.len() == 1 {
            keep.push(nodes[0]);
            continue;
        }
        let l = g.subgraph(&nodes).laplacian(LaplacianKind::Combinatorial);
        let top = eigh_range(&l, Which::Largest(1))?;
        let u = top.vectors.column(0);
        let before = keep.len();
        keep.extend(nodes.iter().zip(u.iter()).filter(|(_, &v)| v > POSITIVE_TOL).map(|(&i, _)| i));
        if keep.len() == before {
            let best = u.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).map(|p| p.0);
            keep.push(nodes[best.expect("component is non-empty")]);
        }
    }
    keep.sort_unstable();
    Ok(keep)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ndp;

impl PoolingOperator for Ndp {
    fn id(&self) -> &str {
        "ndp"
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor { trainable: false, dense: false, fixed: false, hierarchical: true, k_policy: KPolicy::Auto }
    }

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        SelectOutput::from_kept(g.n(), &ndp_keep_set(g)?)
    }

    fn connect(&self, g: &Graph, sel: &SelectOutput) -> Result<DMatrix<f64>, PoolError> {
        let keep: Vec<usize> = sel
            .entries()
            .ok_or_else(|| PoolError::InvalidSelection("ndp expects a kept-node selection".into()))?
            .iter()
            .map(|e| e.node)
            .collect();
        let l = g.laplacian(LaplacianKind::Combinatorial);
        let reduced = kron_reduction(&l, &keep)?;
        let scale = reduced.amax().max(1.0);
        let k = keep.len();
        Ok(DMatrix::from_fn(k, k, |a, b| {
            let w = -reduced[(a, b)];
            if a == b || w.abs() <= CLEAN_TOL * scale {
                0.0
            } else {
                w
            }
        }))
    }
}
