//! Trainable selectors (MinCut, DiffPool, Top-K, SAGPool) with hand-written
//! reverse-mode gradients, an Adam training loop and a gradient checker.

mod gradcheck;
pub mod layers;
pub mod losses;
mod params;
mod train;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use losses::{diffpool_aux, mincut_aux, quad_forms, ReconOutput, ReconTarget, SpectralLoss};
pub use params::SelectorParams;
pub use train::{train, write_loss_curve, Adam, LossKind, TrainConfig, TrainOutcome};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::pooling::{contract, KPolicy, Membership, OperatorDescriptor, PoolError, PoolingOperator, SelectOutput};
use layers::{add_row, column_sums, glorot, relu, relu_backward, softmax_rows, softmax_rows_backward, Propagation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainableKind {
    MinCut,
    DiffPool,
    TopK,
    SagPool,
}

impl TrainableKind {
    pub fn id(self) -> &'static str {
        match self {
            TrainableKind::MinCut => "mincut",
            TrainableKind::DiffPool => "diffpool",
            TrainableKind::TopK => "topk",
            TrainableKind::SagPool => "sagpool",
        }
    }

    fn is_dense(self) -> bool {
        matches!(self, TrainableKind::MinCut | TrainableKind::DiffPool)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Tanh,
    Sigmoid,
}

impl Gate {
    fn value(self, y: f64) -> f64 {
        match self {
            Gate::Tanh => y.tanh(),
            Gate::Sigmoid => 1.0 / (1.0 + (-y).exp()),
        }
    }

    /// Derivative expressed through the gate value.
    fn slope(self, g: f64) -> f64 {
        match self {
            Gate::Tanh => 1.0 - g * g,
            Gate::Sigmoid => g * (1.0 - g),
        }
    }
}

/// What a training step optimises.
#[derive(Debug, Clone)]
pub enum Objective {
    Spectral(SpectralLoss),
    Reconstruction(ReconTarget),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub task: f64,
    /// (cut, ortho) for MinCut, (link, entropy) for DiffPool, zero otherwise.
    pub aux: [f64; 2],
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
enum Cache {
    MinCut { h_pre: DMatrix<f64>, h: DMatrix<f64>, s: DMatrix<f64> },
    DiffPool { ax: DMatrix<f64>, g1_pre: DMatrix<f64>, s: DMatrix<f64>, z_pre: DMatrix<f64>, z: DMatrix<f64> },
    Ranked { base: DMatrix<f64>, keep: Vec<usize>, gates: Vec<f64> },
}

/// Output of a forward pass. `a_pooled` keeps the diagonal of `S^T A S`.
#[derive(Debug, Clone)]
pub struct Forward {
    pub sel: SelectOutput,
    pub x_pooled: DMatrix<f64>,
    pub a_pooled: DMatrix<f64>,
    cache: Cache,
}

impl Forward {
    /// Matrix used to lift pooled features back to the nodes.
    pub fn lift_matrix(&self) -> DMatrix<f64> {
        self.sel.gated_matrix()
    }
}

#[derive(Debug, Clone)]
pub struct TrainablePool {
    kind: TrainableKind,
    k_policy: KPolicy,
    gate: Gate,
    in_features: usize,
    params: SelectorParams,
}

pub const DEFAULT_HIDDEN: usize = 64;

impl TrainablePool {
    /// `MLP(X)` with one hidden ReLU layer followed by a row softmax over `k` columns.
    pub fn mincut(in_features: usize, k: usize, hidden: usize, seed: u64) -> Result<Self, PoolError> {
        check_k(k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = SelectorParams::new()
            .with("w1", glorot(in_features, hidden, &mut rng))
            .with("b1", DMatrix::zeros(1, hidden))
            .with("w2", glorot(hidden, k, &mut rng))
            .with("b2", DMatrix::zeros(1, k));
        Ok(Self { kind: TrainableKind::MinCut, k_policy: KPolicy::Fixed(k), gate: Gate::Tanh, in_features, params })
    }

    /// Assignment and embedding are both one propagation layer.
    pub fn diffpool(in_features: usize, k: usize, seed: u64) -> Result<Self, PoolError> {
        check_k(k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = SelectorParams::new()
            .with("w_gnn1", glorot(in_features, k, &mut rng))
            .with("w_gnn2", glorot(in_features, in_features, &mut rng));
        Ok(Self { kind: TrainableKind::DiffPool, k_policy: KPolicy::Fixed(k), gate: Gate::Tanh, in_features, params })
    }

    /// Scores `y = X p / ||p||`.
    pub fn topk(in_features: usize, ratio: f64, gate: Gate, seed: u64) -> Result<Self, PoolError> {
        check_ratio(ratio)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = SelectorParams::new().with("p", glorot(in_features, 1, &mut rng));
        Ok(Self { kind: TrainableKind::TopK, k_policy: KPolicy::Ratio(ratio), gate, in_features, params })
    }

    /// Scores `y = Â X w + b`.
    pub fn sagpool(in_features: usize, ratio: f64, gate: Gate, seed: u64) -> Result<Self, PoolError> {
        check_ratio(ratio)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = SelectorParams::new().with("w", glorot(in_features, 1, &mut rng)).with("b", DMatrix::zeros(1, 1));
        Ok(Self { kind: TrainableKind::SagPool, k_policy: KPolicy::Ratio(ratio), gate, in_features, params })
    }

    pub fn kind(&self) -> TrainableKind {
        self.kind
    }

    pub fn params(&self) -> &SelectorParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut SelectorParams {
        &mut self.params
    }

    pub fn set_params(&mut self, params: SelectorParams) -> Result<(), PoolError> {
        let same_shape = params.names() == self.params.names()
            && params.iter().zip(self.params.iter()).all(|((_, a), (_, b))| a.shape() == b.shape());
        if !same_shape {
            return Err(PoolError::Config("parameter names or shapes differ".into()));
        }
        self.params = params;
        Ok(())
    }

    fn check_input(&self, g: &Graph) -> Result<(), PoolError> {
        if g.num_features() != self.in_features {
            return Err(PoolError::Config(format!(
                "{} was built for {} features, graph has {}",
                self.kind.id(),
                self.in_features,
                g.num_features()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, g: &Graph) -> Result<Forward, PoolError> {
        self.check_input(g)?;
        let x = g.features();
        match self.kind {
            TrainableKind::MinCut => {
                let h_pre = add_row(x * self.params.get("w1"), self.params.get("b1"));
                let h = relu(&h_pre);
                let s = softmax_rows(&add_row(&h * self.params.get("w2"), self.params.get("b2")));
                let x_pooled = s.tr_mul(x);
                let a_pooled = s.tr_mul(&g.adj_mul(&s));
                let sel = SelectOutput::dense(s.clone())?;
                Ok(Forward { sel, x_pooled, a_pooled, cache: Cache::MinCut { h_pre, h, s } })
            }
            TrainableKind::DiffPool => {
                let ax = Propagation::new(g).apply(x);
                let g1_pre = &ax * self.params.get("w_gnn1");
                let s = softmax_rows(&relu(&g1_pre));
                let z_pre = &ax * self.params.get("w_gnn2");
                let z = relu(&z_pre);
                let x_pooled = s.tr_mul(&z);
                let a_pooled = s.tr_mul(&g.adj_mul(&s));
                let sel = SelectOutput::dense(s.clone())?;
                Ok(Forward { sel, x_pooled, a_pooled, cache: Cache::DiffPool { ax, g1_pre, s, z_pre, z } })
            }
            TrainableKind::TopK | TrainableKind::SagPool => {
                let (base, y) = self.scores(g);
                let (keep, gates) = self.ranked(g.n(), &y);
                let mut x_pooled = DMatrix::zeros(keep.len(), x.ncols());
                for (m, (&i, &gv)) in keep.iter().zip(&gates).enumerate() {
                    for c in 0..x.ncols() {
                        x_pooled[(m, c)] = x[(i, c)] * gv;
                    }
                }
                let entries =
                    keep.iter().enumerate().map(|(m, &node)| Membership { node, supernode: m, score: 1.0 }).collect();
                let sel = SelectOutput::sparse(g.n(), keep.len(), entries, Some(gates.clone()))?;
                let a_pooled = contract(g, &sel);
                Ok(Forward { sel, x_pooled, a_pooled, cache: Cache::Ranked { base, keep, gates } })
            }
        }
    }

    /// The selection of [`forward`](Self::forward) without pooling anything.
    pub fn select_only(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        self.check_input(g)?;
        let x = g.features();
        match self.kind {
            TrainableKind::MinCut => {
                let h = relu(&add_row(x * self.params.get("w1"), self.params.get("b1")));
                SelectOutput::dense(softmax_rows(&add_row(&h * self.params.get("w2"), self.params.get("b2"))))
            }
            TrainableKind::DiffPool => {
                let ax = Propagation::new(g).apply(x);
                SelectOutput::dense(softmax_rows(&relu(&(&ax * self.params.get("w_gnn1")))))
            }
            TrainableKind::TopK | TrainableKind::SagPool => {
                let (_, y) = self.scores(g);
                let (keep, gates) = self.ranked(g.n(), &y);
                let entries =
                    keep.iter().enumerate().map(|(m, &node)| Membership { node, supernode: m, score: 1.0 }).collect();
                SelectOutput::sparse(g.n(), keep.len(), entries, Some(gates))
            }
        }
    }

    /// Kept nodes in ranking order and their gates.
    fn ranked(&self, n: usize, y: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let k = self.k_policy.resolve(n).expect("ratio policy");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        let keep: Vec<usize> = order.into_iter().take(k.min(n)).collect();
        let gates = keep.iter().map(|&i| self.gate.value(y[i])).collect();
        (keep, gates)
    }

    /// Per-node scores for the ranking operators, with the matrix the
    /// score is linear in (`X` for Top-K, `Â X` for SAGPool).
    fn scores(&self, g: &Graph) -> (DMatrix<f64>, Vec<f64>) {
        match self.kind {
            TrainableKind::TopK => {
                let p = self.params.get("p");
                let norm = p.norm();
                let y = g.features() * p;
                let y = y.iter().map(|v| if norm > 0.0 { v / norm } else { 0.0 }).collect();
                (g.features().clone(), y)
            }
            TrainableKind::SagPool => {
                let ax = Propagation::new(g).apply(g.features());
                let b = self.params.get("b")[(0, 0)];
                let y = (&ax * self.params.get("w")).iter().map(|v| v + b).collect();
                (ax, y)
            }
            _ => unreachable!("only ranking operators have node scores"),
        }
    }

    /// Objective value and, when asked, its gradient with respect to every
    /// parameter. The auxiliary losses enter the total with `aux_weight`.
    pub fn loss_and_grad(
        &self,
        g: &Graph,
        objective: &Objective,
        aux_weight: f64,
        want_grad: bool,
    ) -> Result<(LossBreakdown, Option<SelectorParams>), PoolError> {
        let fw = self.forward(g)?;
        let n = g.n();
        let k = fw.sel.k();
        // Upstream gradients w.r.t. X', A' and the lifting matrix R.
        let (task, d_xp, d_ap, d_r) = match objective {
            Objective::Spectral(loss) => {
                if want_grad {
                    let (v, da, dx) = loss.value_and_grad(&fw.a_pooled, &fw.x_pooled);
                    (v, Some(dx), Some(da), None)
                } else {
                    (loss.value(&fw.a_pooled, &fw.x_pooled), None, None, None)
                }
            }
            Objective::Reconstruction(target) => {
                let out = target.evaluate(&fw.lift_matrix(), &fw.x_pooled, want_grad);
                match out.grads {
                    Some((dr, dxp)) => (out.mse, Some(dxp), None, Some(dr)),
                    None => (out.mse, None, None, None),
                }
            }
        };
        let (aux, d_s_aux) = match &fw.cache {
            Cache::MinCut { s, .. } => {
                let (v, gr) = mincut_aux(g, s);
                (v, Some(gr))
            }
            Cache::DiffPool { s, .. } => {
                let (v, gr) = diffpool_aux(g, s);
                (v, Some(gr))
            }
            Cache::Ranked { .. } => ([0.0, 0.0], None),
        };
        let total = task + aux_weight * (aux[0] + aux[1]);
        let breakdown = LossBreakdown { total, task, aux };
        if !want_grad {
            return Ok((breakdown, None));
        }
        let mut grads = self.params.zeros_like();
        let x = g.features();
        match &fw.cache {
            Cache::MinCut { .. } | Cache::DiffPool { .. } => {
                let (s, z) = match &fw.cache {
                    Cache::MinCut { s, .. } => (s, x),
                    Cache::DiffPool { s, z, .. } => (s, z),
                    Cache::Ranked { .. } => unreachable!(),
                };
                let mut ds = DMatrix::zeros(n, k);
                let mut dz = None;
                if let Some(dxp) = &d_xp {
                    // X' = S^T Z
                    ds += z * dxp.transpose();
                    dz = Some(s * dxp);
                }
                if let Some(dap) = &d_ap {
                    // A' = S^T A S
                    ds += g.adj_mul(s) * (dap + dap.transpose());
                }
                if let Some(dr) = &d_r {
                    ds += dr;
                }
                if let Some(da) = &d_s_aux {
                    if aux_weight != 0.0 {
                        ds += da * aux_weight;
                    }
                }
                match &fw.cache {
                    Cache::MinCut { h_pre, h, s } => {
                        let dlogit = softmax_rows_backward(s, &ds);
                        *grads.get_mut("w2") = h.tr_mul(&dlogit);
                        *grads.get_mut("b2") = column_sums(&dlogit);
                        let dh = relu_backward(h_pre, &(&dlogit * self.params.get("w2").transpose()));
                        *grads.get_mut("w1") = x.tr_mul(&dh);
                        *grads.get_mut("b1") = column_sums(&dh);
                    }
                    Cache::DiffPool { ax, g1_pre, s, z_pre, .. } => {
                        let dsm = softmax_rows_backward(s, &ds);
                        *grads.get_mut("w_gnn1") = ax.tr_mul(&relu_backward(g1_pre, &dsm));
                        if let Some(dz) = dz {
                            *grads.get_mut("w_gnn2") = ax.tr_mul(&relu_backward(z_pre, &dz));
                        }
                    }
                    Cache::Ranked { .. } => unreachable!(),
                }
            }
            Cache::Ranked { base, keep, gates } => {
                let mut dy = DMatrix::zeros(n, 1);
                for (m, (&i, &gv)) in keep.iter().zip(gates).enumerate() {
                    let mut dgate = 0.0;
                    if let Some(dxp) = &d_xp {
                        dgate += (0..x.ncols()).map(|c| dxp[(m, c)] * x[(i, c)]).sum::<f64>();
                    }
                    if let Some(dr) = &d_r {
                        dgate += dr[(i, m)];
                    }
                    dy[(i, 0)] = dgate * self.gate.slope(gv);
                }
                let bty = base.tr_mul(&dy);
                match self.kind {
                    TrainableKind::TopK => {
                        let p = self.params.get("p");
                        let norm = p.norm();
                        if norm > 0.0 {
                            let proj = p.dot(&bty);
                            *grads.get_mut("p") = &bty / norm - p * (proj / norm.powi(3));
                        }
                    }
                    TrainableKind::SagPool => {
                        *grads.get_mut("w") = bty;
                        grads.get_mut("b")[(0, 0)] = dy.sum();
                    }
                    _ => unreachable!(),
                }
            }
        }
        Ok((breakdown, Some(grads)))
    }
}

fn check_k(k: usize) -> Result<(), PoolError> {
    if k == 0 {
        return Err(PoolError::Config("K must be >= 1".into()));
    }
    Ok(())
}

fn check_ratio(r: f64) -> Result<(), PoolError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(PoolError::Config(format!("ratio must be in (0, 1], got {r}")));
    }
    Ok(())
}

impl PoolingOperator for TrainablePool {
    fn id(&self) -> &str {
        self.kind.id()
    }

    fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor {
            trainable: true,
            dense: self.kind.is_dense(),
            fixed: self.kind.is_dense(),
            hierarchical: true,
            k_policy: self.k_policy,
        }
    }

    fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        self.select_only(g)
    }

    fn reduce(&self, g: &Graph, sel: &SelectOutput) -> Result<DMatrix<f64>, PoolError> {
        match self.kind {
            TrainableKind::MinCut => Ok(sel.transpose_mul(g.features())),
            TrainableKind::DiffPool => {
                let z = relu(&(Propagation::new(g).apply(g.features()) * self.params.get("w_gnn2")));
                Ok(sel.transpose_mul(&z))
            }
            TrainableKind::TopK | TrainableKind::SagPool => Ok(sel.gated_matrix().tr_mul(g.features())),
        }
    }
}
