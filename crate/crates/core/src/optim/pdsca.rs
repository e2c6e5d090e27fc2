//! PDSCA-style compositional step.
//!
//! The outer AUC(-mixup) objective is evaluated at parameters produced by `k`
//! inner cross-entropy gradient steps. Per outer step:
//!
//! 1. `u = w − η_in·∇CE(w)`, repeated `k` times on the hard batch;
//! 2. `z = u + β₂·(z_prev − u)` (moving average of the inner-stepped point);
//! 3. `g = ∇_w F(z)` for the AUC objective `F` on the (possibly mixed) batch,
//!    then `v = g + β₁·(v_prev − g)`;
//! 4. the PESG primal update is applied from `z` with `v` as the gradient, and
//!    `a`, `b`, `α` take their usual descent/ascent step.
//!
//! With `β₁ = β₂ = 0` and `η_in = 0` this is exactly [`super::pesg_step`].

use serde::{Deserialize, Serialize};

use super::pesg::{update_aux, PesgConfig};
use super::state::{primal_update, TrainState};
use crate::diffcore::{ScoreModel, Tensor};
use crate::error::{Error, Result};
use crate::losses::{auc_mixup_grads, auc_mixup_value, ce_value_and_grads, ScoreSpace, SoftBatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdscaConfig {
    pub outer: PesgConfig,
    pub beta1: f64,
    pub beta2: f64,
    /// Number of inner CE steps `k`.
    pub inner_steps: usize,
    /// Inner step size; `None` uses the current outer learning rate.
    pub inner_lr: Option<f64>,
}

impl Default for PdscaConfig {
    fn default() -> Self {
        PdscaConfig {
            outer: PesgConfig::default(),
            beta1: 0.9,
            beta2: 0.9,
            inner_steps: 1,
            inner_lr: None,
        }
    }
}

impl PdscaConfig {
    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if self.inner_steps == 0 {
            return Err(Error::Config("inner_steps must be at least 1".into()));
        }
        if let Some(l) = self.inner_lr {
            if !(l >= 0.0) {
                return Err(Error::Config(format!("inner_lr must be >= 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// Inner-step data: features and CE targets in `[0,1]`.
#[derive(Debug, Clone, Copy)]
pub struct InnerBatch<'a> {
    pub features: &'a Tensor,
    pub targets: &'a [f64],
}

fn lerp_towards(current: &[f64], previous: Option<&Vec<f64>>, beta: f64) -> Vec<f64> {
    match previous {
        None => current.to_vec(),
        Some(prev) => current
            .iter()
            .zip(prev)
            .map(|(&c, &p)| c + beta * (p - c))
            .collect(),
    }
}

/// One compositional step; returns the outer objective at the averaged point.
pub fn pdsca_step<M: ScoreModel>(
    state: &mut TrainState<M>,
    outer_batch: &SoftBatch,
    inner_batch: InnerBatch<'_>,
    cfg: &PdscaConfig,
) -> Result<f64> {
    state.refresh_reference(cfg.outer.total_steps);
    let lr = cfg.outer.current_lr(state.step);
    let inner_lr = cfg.inner_lr.unwrap_or(lr);
    let space = if state.model.outputs_probabilities() {
        ScoreSpace::Probability
    } else {
        ScoreSpace::Logit
    };

    // 1. inner CE descent
    let mut probe = state.model.clone();
    if inner_lr > 0.0 {
        for _ in 0..cfg.inner_steps {
            let scores = probe.scores(inner_batch.features)?;
            let (_, d) = ce_value_and_grads(&scores, inner_batch.targets, space)?;
            let g = probe.param_grads(inner_batch.features, &d)?;
            let mut u = probe.params();
            for (p, gi) in u.iter_mut().zip(&g) {
                *p -= inner_lr * gi;
            }
            probe.set_params(&u)?;
        }
    }

    // 2. averaged evaluation point
    let z = lerp_towards(&probe.params(), state.ema_params.as_ref(), cfg.beta2);
    probe.set_params(&z)?;

    // 3. outer gradient at z, averaged
    let scores = probe.scores(&outer_batch.features)?;
    let loss = auc_mixup_value(&scores, &outer_batch.soft_labels, &state.aux)?;
    let g = auc_mixup_grads(&scores, &outer_batch.soft_labels, &state.aux)?;
    let grads = probe.param_grads(&outer_batch.features, &g.d_scores)?;
    let v = lerp_towards(&grads, state.ema_grads.as_ref(), cfg.beta1);

    // 4. primal-dual update from z
    let mut params = z.clone();
    primal_update(
        &mut params,
        &v,
        &state.reference_params,
        lr,
        cfg.outer.weight_decay,
        cfg.outer.epoch_decay,
    );
    state.model.set_params(&params)?;
    update_aux(&mut state.aux, &g, lr);
    state.ema_params = Some(z);
    state.ema_grads = Some(v);
    state.finish_step(loss)?;
    Ok(loss)
}
