//! CSV output. Column order is part of the interface; `wall_time_ms` is
//! always last so that reruns can be compared with it stripped.

use std::io::Write;

use super::experiments::StorageTable;
use super::{ExperimentReport, RunStatus};

pub const CSV_COLUMNS: [&str; 16] = [
    "graph",
    "operator",
    "experiment",
    "status",
    "k",
    "mse",
    "gamma",
    "mse_below_gamma",
    "quad_loss",
    "edge_density",
    "median_weight",
    "storage",
    "epochs",
    "eig_before",
    "eig_after",
    "wall_time_ms",
];

pub const STORAGE_COLUMNS: [&str; 5] = ["operator", "n", "k", "storage", "wall_time_ms"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn joined(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn status(s: &RunStatus) -> String {
    match s {
        RunStatus::Ok => "ok".to_string(),
        RunStatus::Failed(msg) => format!("failed: {msg}"),
    }
}

/// One row per report; missing measures are empty cells and spectra are
/// `;`-separated.
pub fn write_reports_csv<W: Write>(reports: &[ExperimentReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.graph_name.clone(),
            r.operator_id.clone(),
            r.experiment.name().to_string(),
            status(&r.status),
            opt(r.k),
            opt(r.mse),
            opt(r.gamma),
            opt(r.mse_below_gamma()),
            opt(r.quad_loss),
            opt(r.edge_density),
            opt(r.median_weight),
            opt(r.storage),
            opt(r.epochs),
            joined(&r.eig_before),
            joined(&r.eig_after),
            r.wall_time_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_storage_csv<W: Write>(tables: &[StorageTable], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STORAGE_COLUMNS)?;
    for t in tables {
        for r in &t.rows {
            w.write_record([
                t.operator_id.clone(),
                r.n.to_string(),
                r.k.to_string(),
                r.storage.to_string(),
                r.wall_time_ms.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
