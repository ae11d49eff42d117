//! Select / reduce / connect contracts and their composition.
//!
//! A pooling operator maps a graph with `N` nodes to one with `K`
//! supernodes. The selection is an `N x K` nonnegative score matrix `S`,
//! stored either densely or as a list of (node, supernode, score) triples.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}: degenerate signal, no leader nodes")]
    Degenerate(String),
    #[error("unknown operator '{0}'")]
    UnknownOperator(String),
    #[error("loss became {loss} at epoch {epoch}; the learning rate is probably too high")]
    Diverged { epoch: usize, loss: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One nonzero of a sparse selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub node: usize,
    pub supernode: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRepr {
    Dense(DMatrix<f64>),
    /// Each node appears at most once. `gates`, when present, has one value
    /// per entry and rescales the reduced features of that node.
    SparseIndex {
        entries: Vec<Membership>,
        gates: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOutput {
    n: usize,
    k: usize,
    repr: SelectionRepr,
}

fn check_score(v: f64) -> Result<(), PoolError> {
    if !v.is_finite() || v < 0.0 {
        return Err(PoolError::InvalidSelection(format!("score {v} is negative or not finite")));
    }
    Ok(())
}

impl SelectOutput {
    pub fn dense(s: DMatrix<f64>) -> Result<Self, PoolError> {
        for &v in s.iter() {
            check_score(v)?;
        }
        Ok(Self { n: s.nrows(), k: s.ncols(), repr: SelectionRepr::Dense(s) })
    }

    pub fn sparse(n: usize, k: usize, entries: Vec<Membership>, gates: Option<Vec<f64>>) -> Result<Self, PoolError> {
        let mut seen = vec![false; n];
        for e in &entries {
            if e.node >= n || e.supernode >= k {
                return Err(PoolError::InvalidSelection(format!(
                    "entry ({}, {}) outside {n}x{k}",
                    e.node, e.supernode
                )));
            }
            if std::mem::replace(&mut seen[e.node], true) {
                return Err(PoolError::InvalidSelection(format!("node {} selected twice", e.node)));
            }
            check_score(e.score)?;
        }
        if let Some(g) = &gates {
            if g.len() != entries.len() {
                return Err(PoolError::InvalidSelection(format!("{} gates for {} entries", g.len(), entries.len())));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(PoolError::InvalidSelection("non-finite gate".into()));
            }
        }
        Ok(Self { n, k, repr: SelectionRepr::SparseIndex { entries, gates } })
    }

    /// Hard assignment: `labels[i]` is the supernode of node `i`.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self, PoolError> {
        let entries =
            labels.iter().enumerate().map(|(node, &supernode)| Membership { node, supernode, score: 1.0 }).collect();
        Self::sparse(labels.len(), k, entries, None)
    }

    /// Keeps the listed nodes, supernode `m` being `nodes[m]`.
    pub fn from_kept(n: usize, nodes: &[usize]) -> Result<Self, PoolError> {
        let entries =
            nodes.iter().enumerate().map(|(m, &node)| Membership { node, supernode: m, score: 1.0 }).collect();
        Self::sparse(n, nodes.len(), entries, None)
    }

    pub fn identity(n: usize) -> Self {
        let nodes: Vec<usize> = (0..n).collect();
        Self::from_kept(n, &nodes).expect("identity selection is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn repr(&self) -> &SelectionRepr {
        &self.repr
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, SelectionRepr::Dense(_))
    }

    pub fn entries(&self) -> Option<&[Membership]> {
        match &self.repr {
            SelectionRepr::SparseIndex { entries, .. } => Some(entries),
            SelectionRepr::Dense(_) => None,
        }
    }

    pub fn gates(&self) -> Option<&[f64]> {
        match &self.repr {
            SelectionRepr::SparseIndex { gates, .. } => gates.as_deref(),
            SelectionRepr::Dense(_) => None,
        }
    }

    /// The `N x K` score matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.expand(false)
    }

    /// Scores multiplied by the gates (equal to [`matrix`](Self::matrix)
    /// when there are none).
    pub fn gated_matrix(&self) -> DMatrix<f64> {
        self.expand(true)
    }

    fn expand(&self, gated: bool) -> DMatrix<f64> {
        match &self.repr {
            SelectionRepr::Dense(s) => s.clone(),
            SelectionRepr::SparseIndex { entries, gates } => {
                let mut s = DMatrix::zeros(self.n, self.k);
                for (t, e) in entries.iter().enumerate() {
                    let g = match gates {
                        Some(g) if gated => g[t],
                        _ => 1.0,
                    };
                    s[(e.node, e.supernode)] = e.score * g;
                }
                s
            }
        }
    }

    /// Pads the score matrix with zero columns up to width `k_bar`.
    pub fn embed(&self, k_bar: usize) -> Result<DMatrix<f64>, PoolError> {
        if k_bar < self.k {
            return Err(PoolError::InvalidSelection(format!("cannot embed K={} into width {k_bar}", self.k)));
        }
        let mut out = DMatrix::zeros(self.n, k_bar);
        out.columns_mut(0, self.k).copy_from(&self.matrix());
        Ok(out)
    }

    /// Number of nonzero memberships of each supernode.
    pub fn support_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        match &self.repr {
            SelectionRepr::Dense(s) => {
                for (c, col) in s.column_iter().enumerate() {
                    sizes[c] = col.iter().filter(|&&v| v != 0.0).count();
                }
            }
            SelectionRepr::SparseIndex { entries, .. } => {
                for e in entries.iter().filter(|e| e.score != 0.0) {
                    sizes[e.supernode] += 1;
                }
            }
        }
        sizes
    }

    pub fn storage_count(&self) -> usize {
        match &self.repr {
            SelectionRepr::Dense(_) => self.n * self.k,
            SelectionRepr::SparseIndex { entries, .. } => entries.len(),
        }
    }

    /// `S^T M` (ungated).
    pub fn transpose_mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.repr {
            SelectionRepr::Dense(s) => s.tr_mul(m),
            SelectionRepr::SparseIndex { entries, .. } => {
                let mut out = DMatrix::zeros(self.k, m.ncols());
                for e in entries {
                    for c in 0..m.ncols() {
                        out[(e.supernode, c)] += e.score * m[(e.node, c)];
                    }
                }
                out
            }
        }
    }
}

/// Mean over supernodes of the fraction of nodes they contain.
pub fn density_of(sel: &SelectOutput, n: usize) -> Result<f64, PoolError> {
    if n == 0 || sel.k() == 0 {
        return Err(PoolError::InvalidSelection("density needs N >= 1 and K >= 1".into()));
    }
    let sizes = sel.support_sizes();
    Ok(sizes.iter().map(|&s| s as f64 / n as f64).sum::<f64>() / sizes.len() as f64)
}

pub fn storage_count(sel: &SelectOutput) -> usize {
    sel.storage_count()
}

/// `X' = S^T X`.
pub fn reduce_transpose(x: &DMatrix<f64>, sel: &SelectOutput) -> DMatrix<f64> {
    sel.transpose_mul(x)
}

/// `S^T A S` including its diagonal.
pub fn contract(g: &Graph, sel: &SelectOutput) -> DMatrix<f64> {
    match sel.repr() {
        SelectionRepr::Dense(s) => s.tr_mul(&g.adj_mul(s)),
        SelectionRepr::SparseIndex { entries, .. } => {
            let mut place = vec![None; g.n()];
            for e in entries {
                place[e.node] = Some((e.supernode, e.score));
            }
            let mut out = DMatrix::zeros(sel.k(), sel.k());
            for e in g.edges() {
                if let (Some((k, si)), Some((l, sj))) = (place[e.i], place[e.j]) {
                    let v = e.w * si * sj;
                    out[(k, l)] += v;
                    out[(l, k)] += v;
                }
            }
            out
        }
    }
}

pub fn zero_diagonal(mut a: DMatrix<f64>) -> DMatrix<f64> {
    a.fill_diagonal(0.0);
    a
}

/// How an operator chooses `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KPolicy {
    Fixed(usize),
    Ratio(f64),
    Auto,
}

impl KPolicy {
    /// `Ratio(r)` resolves to `ceil(r N)` clamped to `[1, N]`; `Auto` has no
    /// a-priori size.
    pub fn resolve(&self, n: usize) -> Option<usize> {
        match *self {
            KPolicy::Fixed(k) => Some(k),
            // The small offset keeps 0.1 * 30 = 3.0000000000000004 at 3.
            KPolicy::Ratio(r) => Some(((r * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n.max(1))),
            KPolicy::Auto => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorDescriptor {
    pub trainable: bool,
    pub dense: bool,
    pub fixed: bool,
    pub hierarchical: bool,
    pub k_policy: KPolicy,
}

impl OperatorDescriptor {
    pub fn is_global(&self) -> bool {
        self.fixed && self.k_policy == KPolicy::Fixed(1)
    }

    /// Same flags, ignoring the size policy.
    pub fn flags(&self) -> (bool, bool, bool, bool) {
        (self.trainable, self.dense, self.fixed, self.hierarchical)
    }
}

pub trait PoolingOperator {
    fn id(&self) -> &str;

    fn descriptor(&self) -> OperatorDescriptor;

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError>;

    fn reduce(&self, g: &Graph, sel: &SelectOutput) -> Result<DMatrix<f64>, PoolError> {
        Ok(reduce_transpose(g.features(), sel))
    }

    fn connect(&self, g: &Graph, sel: &SelectOutput) -> Result<DMatrix<f64>, PoolError> {
        Ok(zero_diagonal(contract(g, sel)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledGraph {
    pub x_pooled: DMatrix<f64>,
    pub a_pooled: DMatrix<f64>,
    pub sel: SelectOutput,
    pub operator_id: String,
}

impl PooledGraph {
    pub fn k(&self) -> usize {
        self.a_pooled.nrows()
    }

    /// The pooled graph as a [`Graph`]; entries of `A'` that are not
    /// strictly positive are treated as missing edges.
    pub fn to_graph(&self) -> Result<Graph, PoolError> {
        let k = self.k();
        let mut edges = Vec::new();
        for j in 0..k {
            for i in 0..j {
                let w = 0.5 * (self.a_pooled[(i, j)] + self.a_pooled[(j, i)]);
                if w > 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Ok(Graph::new(self.x_pooled.clone(), edges, None)?)
    }
}

fn run_pool(
    g: &Graph,
    op: &dyn PoolingOperator,
    reduce: impl FnOnce(&SelectOutput) -> Result<DMatrix<f64>, PoolError>,
) -> Result<PooledGraph, PoolError> {
    let desc = op.descriptor();
    let sel = op.select(g)?;
    if sel.n() != g.n() {
        return Err(PoolError::InvalidSelection(format!("selection has {} rows for {} nodes", sel.n(), g.n())));
    }
    let k = sel.k();
    if desc.fixed && k > g.n() {
        log::warn!("{}: fixed K={k} exceeds N={}, the graph is upscaled", op.id(), g.n());
    }
    let x_pooled = reduce(&sel)?;
    let a_pooled = if desc.is_global() { DMatrix::zeros(1, 1) } else { op.connect(g, &sel)? };
    if x_pooled.nrows() != k || a_pooled.shape() != (k, k) {
        return Err(PoolError::InvalidSelection(format!(
            "{}: reduce/connect shapes {:?}/{:?} disagree with K={k}",
            op.id(),
            x_pooled.shape(),
            a_pooled.shape()
        )));
    }
    Ok(PooledGraph { x_pooled, a_pooled, sel, operator_id: op.id().to_string() })
}

/// Select, then reduce, then connect.
pub fn pool(g: &Graph, op: &dyn PoolingOperator) -> Result<PooledGraph, PoolError> {
    run_pool(g, op, |sel| op.reduce(g, sel))
}

/// Like [`pool`] but with the reduction replaced by `X' = S^T X`.
pub fn pool_modified_reduce(g: &Graph, op: &dyn PoolingOperator) -> Result<PooledGraph, PoolError> {
    run_pool(g, op, |sel| Ok(reduce_transpose(g.features(), sel)))
}
