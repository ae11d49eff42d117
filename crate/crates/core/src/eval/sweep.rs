//! Runs many experiments on a fixed number of worker threads. Each run is
//! single-threaded and reports come back in job order, so the output does
//! not depend on the worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::Duration;

use crate::graph::Graph;

use super::experiments::{run_autoencoder, run_spectral, ExperimentKind, RunConfig};
use super::ExperimentReport;

/// Per-run limit after which the run is marked failed.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone)]
pub struct Job {
    pub graph_name: String,
    pub graph: Arc<Graph>,
    pub operator_id: String,
    pub experiment: ExperimentKind,
    pub config: RunConfig,
}

impl Job {
    fn run(&self) -> ExperimentReport {
        match self.experiment {
            ExperimentKind::Autoencoder => {
                run_autoencoder(&self.graph_name, &self.graph, &self.operator_id, &self.config)
            }
            ExperimentKind::Spectral => run_spectral(&self.graph_name, &self.graph, &self.operator_id, &self.config),
        }
    }

    fn blank(&self) -> ExperimentReport {
        ExperimentReport::new(&self.graph_name, &self.operator_id, self.experiment)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub workers: usize,
    pub timeout: Duration,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { workers: 1, timeout: DEFAULT_TIMEOUT }
    }
}

/// A run that exceeds the timeout is abandoned: its thread keeps running
/// in the background but its result is discarded.
fn run_with_timeout(job: &Job, timeout: Duration) -> ExperimentReport {
    let (tx, rx) = mpsc::channel();
    let owned = job.clone();
    let spawned = thread::Builder::new().name(format!("{}-{}", job.graph_name, job.operator_id)).spawn(move || {
        let _ = tx.send(owned.run());
    });
    if let Err(e) = spawned {
        return job.blank().failed(format!("could not start run: {e}"));
    }
    match rx.recv_timeout(timeout) {
        Ok(rep) => rep,
        Err(mpsc::RecvTimeoutError::Timeout) => {
            log::warn!("{} on {} timed out", job.operator_id, job.graph_name);
            let mut rep = job.blank().failed(format!("timed out after {} s", timeout.as_secs_f64()));
            rep.wall_time_ms = timeout.as_millis() as u64;
            rep
        }
        Err(mpsc::RecvTimeoutError::Disconnected) => job.blank().failed("run panicked"),
    }
}

pub fn run_sweep(jobs: &[Job], opts: &SweepOptions) -> Vec<ExperimentReport> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ExperimentReport>>> = Mutex::new(vec![None; jobs.len()]);
    let workers = opts.workers.max(1).min(jobs.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                log::info!("running {} {} on {}", job.experiment, job.operator_id, job.graph_name);
                let rep = run_with_timeout(job, opts.timeout);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(rep);
            });
        }
    });
    slots.into_inner().expect("workers finished").into_iter().map(|r| r.expect("every job ran")).collect()
}
