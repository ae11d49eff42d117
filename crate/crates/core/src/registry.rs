//! Operators addressable by string id, configured through `key=value` pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::graph::{Graph, LaplacianKind};
use crate::ops::{
    GlobalSum, Graclus, GraclusConfig, GraclusConnect, GraclusReduce, Identity, LaPool, LaPoolConfig, Ndp, Nmf,
    NmfConfig, NormOrder, VisitOrder,
};
use crate::pooling::{KPolicy, OperatorDescriptor, PoolError, PoolingOperator, SelectOutput};
use crate::trainable::{Gate, TrainablePool, DEFAULT_HIDDEN};

/// The eight operators of the benchmark.
pub const OPERATOR_IDS: [&str; 8] = ["diffpool", "mincut", "nmf", "lapool", "topk", "sagpool", "ndp", "graclus"];

/// Baselines that are also accepted by [`build_operator`].
pub const EXTRA_IDS: [&str; 2] = ["identity", "global"];

/// Size of the reference graph used by [`taxonomy`].
pub const REFERENCE_N: usize = 64;

/// Operator hyperparameters, kept sorted so their rendering is canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpArgs(BTreeMap<String, String>);

impl OpArgs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` items.
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self, PoolError> {
        let mut out = Self::new();
        for item in items {
            let item = item.as_ref();
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| PoolError::Config(format!("operator argument '{item}' is not key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(PoolError::Config(format!("operator argument '{item}' has an empty key")));
            }
            out.0.insert(k.to_string(), v.to_string());
        }
        Ok(out)
    }

    /// Like [`parse`](Self::parse) for a sweep: items written `op:key=value`
    /// apply to operator `op` only, plain `key=value` items to every operator.
    pub fn parse_for<S: AsRef<str>>(items: &[S], op_id: &str) -> Result<Self, PoolError> {
        let mut mine = Vec::new();
        for item in items {
            let item = item.as_ref();
            let key = item.split_once('=').map_or(item, |(k, _)| k);
            match key.split_once(':') {
                Some((scope, _)) if scope.trim() == op_id => mine.push(item.split_once(':').unwrap().1),
                Some(_) => {}
                None => mine.push(item),
            }
        }
        Self::parse(&mine)
    }

    pub fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, PoolError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| PoolError::Config(format!("cannot parse operator argument {key}={v}")))
            }
        }
    }

    fn only(&self, id: &str, allowed: &[&str]) -> Result<(), PoolError> {
        for k in self.0.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(PoolError::Config(format!(
                    "operator '{id}' does not take '{k}' (accepted: {})",
                    if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for OpArgs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

pub enum Operator {
    Fixed(Box<dyn PoolingOperator + Send + Sync>),
    Trainable(TrainablePool),
}

impl Operator {
    pub fn as_pooling(&self) -> &dyn PoolingOperator {
        match self {
            Operator::Fixed(op) => op.as_ref(),
            Operator::Trainable(op) => op,
        }
    }

    pub fn id(&self) -> &str {
        self.as_pooling().id()
    }

    pub fn descriptor(&self) -> OperatorDescriptor {
        self.as_pooling().descriptor()
    }

    pub fn trainable_mut(&mut self) -> Option<&mut TrainablePool> {
        match self {
            Operator::Trainable(op) => Some(op),
            Operator::Fixed(_) => None,
        }
    }

    /// The selection alone; for trainable operators this skips computing the
    /// pooled features and adjacency.
    pub fn select(&self, g: &Graph) -> Result<SelectOutput, PoolError> {
        match self {
            Operator::Fixed(op) => op.select(g),
            Operator::Trainable(op) => op.select_only(g),
        }
    }
}

fn ratio_arg(args: &OpArgs) -> Result<f64, PoolError> {
    Ok(args.get("ratio")?.unwrap_or(0.5))
}

fn gate_arg(args: &OpArgs) -> Result<Gate, PoolError> {
    match args.get::<String>("gate")?.as_deref() {
        None | Some("tanh") => Ok(Gate::Tanh),
        Some("sigmoid") => Ok(Gate::Sigmoid),
        Some(other) => Err(PoolError::Config(format!("gate must be tanh or sigmoid, got {other}"))),
    }
}

/// `k` argument, defaulting to `floor(N / 2)` (at least 1).
fn fixed_k(args: &OpArgs, n: usize) -> Result<usize, PoolError> {
    Ok(args.get("k")?.unwrap_or((n / 2).max(1)))
}

/// Builds operator `id` for graphs shaped like `g` (feature width, and `N`
/// for size defaults). `seed` drives parameter initialisation and any
/// randomised choices.
pub fn build_operator(id: &str, g: &Graph, args: &OpArgs, seed: u64) -> Result<Operator, PoolError> {
    let f = g.num_features();
    let n = g.n();
    let op = match id {
        "identity" => {
            args.only(id, &[])?;
            Operator::Fixed(Box::new(Identity))
        }
        "global" => {
            args.only(id, &[])?;
            Operator::Fixed(Box::new(GlobalSum))
        }
        "ndp" => {
            args.only(id, &[])?;
            Operator::Fixed(Box::new(Ndp))
        }
        "graclus" => {
            args.only(id, &["reduce", "connect", "order"])?;
            let reduce = match args.get::<String>("reduce")?.as_deref() {
                None | Some("mean") => GraclusReduce::Mean,
                Some("sum") => GraclusReduce::Sum,
                Some(o) => return Err(PoolError::Config(format!("graclus reduce must be mean or sum, got {o}"))),
            };
            let connect = match args.get::<String>("connect")?.as_deref() {
                None | Some("normalized") => GraclusConnect::Normalized,
                Some("contracted") => GraclusConnect::Contracted,
                Some(o) => {
                    return Err(PoolError::Config(format!("graclus connect must be normalized or contracted, got {o}")))
                }
            };
            let order = match args.get::<String>("order")?.as_deref() {
                None | Some("ascending") => VisitOrder::Ascending,
                Some("shuffled") => VisitOrder::Shuffled(seed),
                Some(o) => {
                    return Err(PoolError::Config(format!("graclus order must be ascending or shuffled, got {o}")))
                }
            };
            Operator::Fixed(Box::new(Graclus::new(GraclusConfig { order, reduce, connect })))
        }
        "nmf" => {
            args.only(id, &["k", "ratio", "max_iters", "tol"])?;
            let defaults = NmfConfig::default();
            let rank = match args.get::<usize>("k")? {
                Some(k) => KPolicy::Fixed(k),
                None => KPolicy::Ratio(ratio_arg(args)?),
            };
            let cfg = NmfConfig {
                rank,
                max_iters: args.get("max_iters")?.unwrap_or(defaults.max_iters),
                tol: args.get("tol")?.unwrap_or(defaults.tol),
                seed,
            };
            Operator::Fixed(Box::new(Nmf::new(cfg)))
        }
        "lapool" => {
            args.only(id, &["beta", "norm", "laplacian"])?;
            let norm_order = match args.get::<String>("norm")?.as_deref() {
                None | Some("2") => NormOrder::L2,
                Some("1") => NormOrder::L1,
                Some("inf") => NormOrder::Inf,
                Some(o) => return Err(PoolError::Config(format!("lapool norm must be 1, 2 or inf, got {o}"))),
            };
            let laplacian = match args.get::<String>("laplacian")?.as_deref() {
                None | Some("comb") => LaplacianKind::Combinatorial,
                Some("sym") => LaplacianKind::SymNormalized,
                Some(o) => return Err(PoolError::Config(format!("lapool laplacian must be comb or sym, got {o}"))),
            };
            let beta = args.get("beta")?.unwrap_or(1.0);
            Operator::Fixed(Box::new(LaPool::new(LaPoolConfig { beta, norm_order, laplacian })?))
        }
        "mincut" => {
            args.only(id, &["k", "hidden"])?;
            let hidden = args.get("hidden")?.unwrap_or(DEFAULT_HIDDEN);
            Operator::Trainable(TrainablePool::mincut(f, fixed_k(args, n)?, hidden, seed)?)
        }
        "diffpool" => {
            args.only(id, &["k"])?;
            Operator::Trainable(TrainablePool::diffpool(f, fixed_k(args, n)?, seed)?)
        }
        "topk" => {
            args.only(id, &["ratio", "gate"])?;
            Operator::Trainable(TrainablePool::topk(f, ratio_arg(args)?, gate_arg(args)?, seed)?)
        }
        "sagpool" => {
            args.only(id, &["ratio", "gate"])?;
            Operator::Trainable(TrainablePool::sagpool(f, ratio_arg(args)?, gate_arg(args)?, seed)?)
        }
        other => return Err(PoolError::UnknownOperator(other.to_string())),
    };
    Ok(op)
}

/// Descriptor of operator `id` with default arguments, as built for a
/// graph of [`REFERENCE_N`] nodes (fixed operators therefore report
/// `Fixed(32)`).
pub fn taxonomy(id: &str) -> Result<OperatorDescriptor, PoolError> {
    let g = Graph::new(nalgebra::DMatrix::zeros(REFERENCE_N, 1), [], None)?;
    Ok(build_operator(id, &g, &OpArgs::new(), 0)?.descriptor())
}
