//! Adam with early stopping on the training loss.

use std::io::Write;

use crate::graph::Graph;
use crate::pooling::PoolError;

use super::{Objective, SelectorParams, TrainablePool};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Spectral,
    Reconstruction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without an improvement larger than `tol` before stopping.
    pub patience: usize,
    pub tol: f64,
    /// Seeds parameter initialisation in the experiment runners.
    pub seed: u64,
    pub loss: LossKind,
    pub aux_weight: f64,
}

impl TrainConfig {
    pub fn spectral() -> Self {
        Self {
            learning_rate: 0.01,
            max_epochs: 5000,
            patience: 50,
            tol: 1e-6,
            seed: 0,
            loss: LossKind::Spectral,
            aux_weight: 0.0,
        }
    }

    pub fn reconstruction() -> Self {
        Self {
            learning_rate: 0.0005,
            max_epochs: 5000,
            patience: 1000,
            tol: 1e-6,
            seed: 0,
            loss: LossKind::Reconstruction,
            aux_weight: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), PoolError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(PoolError::Config(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.patience == 0 {
            return Err(PoolError::Config("patience must be >= 1".into()));
        }
        if !(self.tol >= 0.0) || !self.aux_weight.is_finite() {
            return Err(PoolError::Config("tol must be >= 0 and aux_weight finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: SelectorParams,
    v: SelectorParams,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, like: &SelectorParams) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: like.zeros_like(), v: like.zeros_like(), t: 0 }
    }

    pub fn step(&mut self, params: &mut SelectorParams, grads: &SelectorParams) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for (m, g) in self.m.zip_values_mut(grads) {
            m.zip_apply(g, |mi, gi| *mi = b1 * *mi + (1.0 - b1) * gi);
        }
        for (v, g) in self.v.zip_values_mut(grads) {
            v.zip_apply(g, |vi, gi| *vi = b2 * *vi + (1.0 - b2) * gi * gi);
        }
        let mut update = self.m.clone();
        for (u, v) in update.zip_values_mut(&self.v) {
            u.zip_apply(v, |ui, vi| *ui = (*ui / c1) / ((vi / c2).sqrt() + self.eps));
        }
        params.add_scaled(-self.lr, &update);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Loss at the start of every epoch that was run.
    pub curve: Vec<f64>,
    pub best_loss: f64,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Runs Adam on `objective` and leaves the operator at its best parameters.
pub fn train(
    op: &mut TrainablePool,
    g: &Graph,
    objective: &Objective,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, PoolError> {
    cfg.validate()?;
    let mut adam = Adam::new(cfg.learning_rate, op.params());
    let mut curve = Vec::new();
    let mut best = (f64::INFINITY, 0, op.params().clone());
    let mut waited = 0;
    let mut stopped_early = false;
    for epoch in 0..cfg.max_epochs {
        if !op.params().is_finite() {
            return Err(PoolError::Diverged { epoch, loss: f64::NAN });
        }
        let (loss, grads) = op.loss_and_grad(g, objective, cfg.aux_weight, true)?;
        let grads = grads.expect("gradients requested");
        if !loss.total.is_finite() || !grads.is_finite() {
            return Err(PoolError::Diverged { epoch, loss: loss.total });
        }
        curve.push(loss.total);
        if loss.total < best.0 - cfg.tol {
            best = (loss.total, epoch, op.params().clone());
            waited = 0;
        } else {
            waited += 1;
            if waited >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
        adam.step(op.params_mut(), &grads);
    }
    if !curve.is_empty() {
        op.set_params(best.2)?;
    }
    Ok(TrainOutcome { curve, best_loss: best.0, best_epoch: best.1, stopped_early })
}

/// CSV with header `epoch,loss`.
pub fn write_loss_curve<W: Write>(curve: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,loss")?;
    for (e, l) in curve.iter().enumerate() {
        writeln!(out, "{e},{l}")?;
    }
    Ok(())
}
