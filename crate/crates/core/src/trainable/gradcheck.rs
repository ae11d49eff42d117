//! Central finite-difference check of the analytic gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::pooling::PoolError;

use super::{Objective, TrainablePool};

const STEP: f64 = 1e-5;
/// Denominator floor: entries whose gradients are both below this are
/// compared on an absolute scale.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameter name, row, column, analytic and numeric value of the worst entry.
    pub worst: Option<(&'static str, usize, usize, f64, f64)>,
}

/// Compares analytic and numeric gradients of the total loss on at most
/// `max_samples` parameters drawn without replacement.
pub fn gradient_check(
    op: &TrainablePool,
    g: &Graph,
    objective: &Objective,
    aux_weight: f64,
    max_samples: usize,
    seed: u64,
) -> Result<GradCheckReport, PoolError> {
    let (_, grads) = op.loss_and_grad(g, objective, aux_weight, true)?;
    let grads = grads.expect("gradients requested");
    let total = op.params().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, total, max_samples.min(total)).into_vec();
    picked.sort_unstable();
    let mut probe = op.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, worst: None };
    for idx in picked {
        let orig = op.params().scalar(idx);
        probe.params_mut().set_scalar(idx, orig + STEP);
        let plus = probe.loss_and_grad(g, objective, aux_weight, false)?.0.total;
        probe.params_mut().set_scalar(idx, orig - STEP);
        let minus = probe.loss_and_grad(g, objective, aux_weight, false)?.0.total;
        probe.params_mut().set_scalar(idx, orig);
        let numeric = (plus - minus) / (2.0 * STEP);
        let analytic = grads.scalar(idx);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
        report.checked += 1;
        if rel > report.max_rel_error || report.worst.is_none() {
            let (name, r, c) = op.params().locate(idx);
            report.max_rel_error = rel.max(report.max_rel_error);
            report.worst = Some((name, r, c, analytic, numeric));
        }
    }
    Ok(report)
}
