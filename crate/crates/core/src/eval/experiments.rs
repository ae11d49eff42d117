//! Single-run experiments. Errors inside a run are captured in the report.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::graph::{build_erdos_renyi, Graph};
use crate::pooling::{pool, pool_modified_reduce, PoolError, PooledGraph};
use crate::registry::{build_operator, OpArgs};
use crate::trainable::{train, Objective, ReconTarget, SpectralLoss, TrainConfig};

use super::metrics::{
    fit_loglog_slope, gamma_baseline, quadratic_loss, spectral_signal, spectrum_alignment, structure_stats,
};
use super::{ExperimentReport, RunStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    /// Pool the coordinates, lift them back and measure the MSE.
    Autoencoder,
    /// Compare Laplacian quadratic forms of a spectral signal.
    Spectral,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Autoencoder => "ae",
            ExperimentKind::Spectral => "spectral",
        }
    }

    /// Training defaults for this experiment.
    pub fn train_config(self) -> TrainConfig {
        match self {
            ExperimentKind::Autoencoder => TrainConfig::reconstruction(),
            ExperimentKind::Spectral => TrainConfig::spectral(),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = PoolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ae" => Ok(ExperimentKind::Autoencoder),
            "spectral" => Ok(ExperimentKind::Spectral),
            other => Err(PoolError::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Everything a run needs besides the graph and the operator id.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub op_args: OpArgs,
    /// `train.seed` also seeds operator construction.
    pub train: TrainConfig,
}

fn timed(
    mut rep: ExperimentReport,
    body: impl FnOnce(&mut ExperimentReport) -> Result<(), PoolError>,
) -> ExperimentReport {
    let start = Instant::now();
    if let Err(e) = body(&mut rep) {
        rep.status = RunStatus::Failed(e.to_string());
    }
    rep.wall_time_ms = start.elapsed().as_millis() as u64;
    rep
}

fn record_structure(rep: &mut ExperimentReport, pooled: &PooledGraph) {
    let stats = structure_stats(&pooled.a_pooled);
    rep.k = Some(pooled.k());
    rep.storage = Some(pooled.sel.storage_count());
    rep.edge_density = Some(stats.edge_density);
    rep.median_weight = stats.median_weight;
}

/// Pools the spectral test signal and reports the quadratic loss, the
/// pooled structure and both normalised spectra. Trainable operators are
/// first fitted to the quadratic loss.
pub fn run_spectral(graph_name: &str, g: &Graph, op_id: &str, cfg: &RunConfig) -> ExperimentReport {
    timed(ExperimentReport::new(graph_name, op_id, ExperimentKind::Spectral), |rep| {
        let signal = spectral_signal(g)?;
        let gs = g.with_features(signal.clone())?;
        let mut op = build_operator(op_id, &gs, &cfg.op_args, cfg.train.seed)?;
        if let Some(t) = op.trainable_mut() {
            let objective = Objective::Spectral(SpectralLoss::new(g, &signal));
            let out = train(t, &gs, &objective, &cfg.train)?;
            rep.epochs = Some(out.curve.len());
            rep.loss_curve = out.curve;
        }
        let pooled = pool(&gs, op.as_pooling())?;
        record_structure(rep, &pooled);
        rep.quad_loss = Some(quadratic_loss(g, &signal, &pooled));
        let spectra = spectrum_alignment(g, &pooled)?;
        rep.eig_before = spectra.before;
        rep.eig_after = spectra.after;
        Ok(())
    })
}

/// Pools the node coordinates (features when there are none), lifts them
/// back with the transposed pseudo-inverse of the (gated) selection and
/// reports the reconstruction MSE next to the adjacent-point baseline.
///
/// Non-trainable operators reduce with `S^T X` here, the reduction the
/// lift inverts; trainable ones are fitted to the reconstruction loss and
/// keep their own reduction.
pub fn run_autoencoder(graph_name: &str, g: &Graph, op_id: &str, cfg: &RunConfig) -> ExperimentReport {
    timed(ExperimentReport::new(graph_name, op_id, ExperimentKind::Autoencoder), |rep| {
        let x = g.coords().unwrap_or(g.features()).clone();
        let gx = g.with_features(x.clone())?;
        rep.gamma = Some(gamma_baseline(&gx)?);
        let target = ReconTarget::new(&gx, &x);
        let mut op = build_operator(op_id, &gx, &cfg.op_args, cfg.train.seed)?;
        let (pooled, mse) = match op.trainable_mut() {
            Some(t) => {
                let out = train(t, &gx, &Objective::Reconstruction(target.clone()), &cfg.train)?;
                rep.epochs = Some(out.curve.len());
                rep.loss_curve = out.curve;
                let fw = t.forward(&gx)?;
                let mse = target.evaluate(&fw.lift_matrix(), &fw.x_pooled, false).mse;
                (pool(&gx, &*t)?, mse)
            }
            None => {
                let pooled = pool_modified_reduce(&gx, op.as_pooling())?;
                let mse = target.evaluate(&pooled.sel.gated_matrix(), &pooled.x_pooled, false).mse;
                (pooled, mse)
            }
        };
        record_structure(rep, &pooled);
        rep.mse = Some(mse);
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageRow {
    pub n: usize,
    pub k: usize,
    pub storage: usize,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageTable {
    pub operator_id: String,
    pub rows: Vec<StorageRow>,
    /// Log-log slope of storage against `N`; needs two sizes.
    pub slope: Option<f64>,
}

impl StorageTable {
    pub fn storage_at(&self, n: usize) -> Option<usize> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.storage)
    }
}

/// Counts the stored values of the selection on Erdős–Rényi graphs of the
/// given sizes.
pub fn storage_probe(
    op_id: &str,
    sizes: &[usize],
    p: f64,
    seed: u64,
    args: &OpArgs,
) -> Result<StorageTable, PoolError> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let start = Instant::now();
        let g = build_erdos_renyi(n, p, seed)?;
        let sel = build_operator(op_id, &g, args, seed)?.select(&g)?;
        rows.push(StorageRow {
            n,
            k: sel.k(),
            storage: sel.storage_count(),
            wall_time_ms: start.elapsed().as_millis() as u64,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.storage as f64)).collect();
    let slope = fit_loglog_slope(&points);
    Ok(StorageTable { operator_id: op_id.to_string(), rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid2d, build_ring};

    fn cfg(kind: ExperimentKind) -> RunConfig {
        RunConfig { op_args: OpArgs::new(), train: kind.train_config() }
    }

    #[test]
    fn identity_is_lossless() {
        for g in [build_grid2d(4, 4).unwrap(), build_ring(9).unwrap()] {
            let ae = run_autoencoder("g", &g, "identity", &cfg(ExperimentKind::Autoencoder));
            assert!(ae.is_ok(), "{ae:?}");
            assert!(ae.mse.unwrap() < 1e-20);
            let sp = run_spectral("g", &g, "identity", &cfg(ExperimentKind::Spectral));
            assert!(sp.quad_loss.unwrap() < 1e-12);
        }
    }

    #[test]
    fn failures_are_reported_not_raised() {
        let g = build_ring(8).unwrap();
        let r = run_spectral("ring", &g, "nope", &cfg(ExperimentKind::Spectral));
        assert!(matches!(r.status, RunStatus::Failed(_)));
        assert_eq!(r.quad_loss, None);
    }

    #[test]
    fn ndp_ring_reconstructs_below_gamma() {
        let g = build_ring(64).unwrap();
        let r = run_autoencoder("ring", &g, "ndp", &cfg(ExperimentKind::Autoencoder));
        assert_eq!(r.mse_below_gamma(), Some(true), "{r:?}");
    }

    #[test]
    fn single_size_has_no_slope() {
        let t = storage_probe("topk", &[50], 0.1, 0, &OpArgs::new()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.slope, None);
        assert_eq!(t.storage_at(50), Some(25));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [ExperimentKind::Autoencoder, ExperimentKind::Spectral] {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("storage".parse::<ExperimentKind>().is_err());
    }
}
