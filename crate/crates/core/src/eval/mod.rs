//! Experiments comparing pooling operators: autoencoder reconstruction,
//! spectral (quadratic form) preservation and selection storage.

mod experiments;
mod metrics;
mod report;
mod svg;
mod sweep;

pub use experiments::{run_autoencoder, run_spectral, storage_probe, ExperimentKind, RunConfig, StorageTable};
pub use metrics::{
    fit_loglog_slope, gamma_baseline, graph_structure, quadratic_loss, rescaled_indices, spectral_signal,
    spectrum_alignment, structure_stats, SpectrumPair, StructureStats, SIGNAL_EIGENVECTORS,
};
pub use report::{write_reports_csv, write_storage_csv, CSV_COLUMNS, STORAGE_COLUMNS};
pub use svg::{loss_curve_svg, spectra_svg};
pub use sweep::{run_sweep, Job, SweepOptions, DEFAULT_TIMEOUT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// The run raised an error or timed out; the message is kept for the report.
    Failed(String),
}

/// One (graph, operator, experiment) run. Measures that were not computed,
/// or could not be because the run failed, are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub graph_name: String,
    pub operator_id: String,
    pub experiment: ExperimentKind,
    pub status: RunStatus,
    pub k: Option<usize>,
    pub mse: Option<f64>,
    pub gamma: Option<f64>,
    pub quad_loss: Option<f64>,
    pub edge_density: Option<f64>,
    pub median_weight: Option<f64>,
    pub storage: Option<usize>,
    /// Training epochs run, for trainable operators.
    pub epochs: Option<usize>,
    pub eig_before: Vec<f64>,
    pub eig_after: Vec<f64>,
    pub loss_curve: Vec<f64>,
    pub wall_time_ms: u64,
}

impl ExperimentReport {
    pub fn new(graph_name: &str, operator_id: &str, experiment: ExperimentKind) -> Self {
        Self {
            graph_name: graph_name.to_string(),
            operator_id: operator_id.to_string(),
            experiment,
            status: RunStatus::Ok,
            k: None,
            mse: None,
            gamma: None,
            quad_loss: None,
            edge_density: None,
            median_weight: None,
            storage: None,
            epochs: None,
            eig_before: Vec::new(),
            eig_after: Vec::new(),
            loss_curve: Vec::new(),
            wall_time_ms: 0,
        }
    }

    pub fn failed(mut self, msg: impl Into<String>) -> Self {
        self.status = RunStatus::Failed(msg.into());
        self
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    /// Whether the reconstruction error stays within the adjacent-point distance.
    pub fn mse_below_gamma(&self) -> Option<bool> {
        Some(self.mse? <= self.gamma?)
    }
}
