//! PESG-style primal-dual step for the AUC(-mixup) min-max objective.
//!
//! One step does simultaneous gradient descent on the network weights and the
//! centers `a`, `b`, and projected gradient ascent on `α`, all at the current
//! scheduled learning rate. The weights additionally see an L2 weight decay
//! and an epoch-decay pull `γ·(w − w_ref)` towards the stage's reference
//! snapshot.

use serde::{Deserialize, Serialize};

use super::schedule::lr_factor;
use super::state::{primal_update, TrainState};
use crate::diffcore::ScoreModel;
use crate::error::{Error, Result};
use crate::losses::{auc_mixup_grads, auc_mixup_value, AucAuxiliaries, AucGrads, SoftBatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PesgConfig {
    pub lr: f64,
    pub margin: f64,
    pub weight_decay: f64,
    pub epoch_decay: f64,
    pub total_steps: u64,
}

impl Default for PesgConfig {
    fn default() -> Self {
        PesgConfig {
            lr: 0.1,
            margin: 1.0,
            weight_decay: 1e-4,
            epoch_decay: 1e-3,
            total_steps: 1,
        }
    }
}

impl PesgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !(self.margin > 0.0) {
            return Err(Error::Config(format!(
                "need lr >= 0 and margin > 0, got lr={} margin={}",
                self.lr, self.margin
            )));
        }
        if !(self.weight_decay >= 0.0) || !(self.epoch_decay >= 0.0) {
            return Err(Error::Config(
                "decay parameters must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn current_lr(&self, step: u64) -> f64 {
        self.lr * lr_factor(step, self.total_steps)
    }
}

/// Descent on `a`, `b`; projected ascent on `α`.
pub(crate) fn update_aux(aux: &mut AucAuxiliaries, g: &AucGrads, lr: f64) {
    aux.a -= lr * g.d_a;
    aux.b -= lr * g.d_b;
    aux.alpha = (aux.alpha + lr * g.d_alpha).max(0.0);
}

/// One PESG-style step on `batch`; returns the objective before the update.
pub fn pesg_step<M: ScoreModel>(
    state: &mut TrainState<M>,
    batch: &SoftBatch,
    cfg: &PesgConfig,
) -> Result<f64> {
    state.refresh_reference(cfg.total_steps);
    let lr = cfg.current_lr(state.step);

    let scores = state.model.scores(&batch.features)?;
    let loss = auc_mixup_value(&scores, &batch.soft_labels, &state.aux)?;
    let g = auc_mixup_grads(&scores, &batch.soft_labels, &state.aux)?;
    let grads = state.model.param_grads(&batch.features, &g.d_scores)?;

    let mut params = state.model.params();
    primal_update(
        &mut params,
        &grads,
        &state.reference_params,
        lr,
        cfg.weight_decay,
        cfg.epoch_decay,
    );
    state.model.set_params(&params)?;
    update_aux(&mut state.aux, &g, lr);
    state.finish_step(loss)?;
    Ok(loss)
}
