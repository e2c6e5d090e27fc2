use crate::diffcore::{ScoreModel, Tensor};
use crate::error::{Error, Result};
use crate::losses::AucAuxiliaries;

use super::schedule::is_breakpoint;

/// Everything a primal-dual run carries between steps.
#[derive(Debug, Clone)]
pub struct TrainState<M: ScoreModel> {
    pub model: M,
    pub aux: AucAuxiliaries,
    /// Anchor of the epoch-decay proximal term, refreshed at every
    /// learning-rate breakpoint.
    pub reference_params: Vec<f64>,
    /// Moving average of the (inner-stepped) parameters, compositional runs only.
    pub ema_params: Option<Vec<f64>>,
    /// Moving average of the outer gradient, compositional runs only.
    pub ema_grads: Option<Vec<f64>>,
    pub step: u64,
}

impl<M: ScoreModel> TrainState<M> {
    pub fn new(model: M, margin: f64) -> Self {
        let reference_params = model.params();
        TrainState {
            model,
            aux: AucAuxiliaries::new(margin),
            reference_params,
            ema_params: None,
            ema_grads: None,
            step: 0,
        }
    }

    /// Re-anchors the proximal term when `self.step` starts a new stage.
    pub(crate) fn refresh_reference(&mut self, total_steps: u64) {
        if is_breakpoint(self.step, total_steps) {
            self.reference_params = self.model.params();
        }
    }

    pub(crate) fn finish_step(&mut self, loss: f64) -> Result<()> {
        if !loss.is_finite() {
            return Err(Error::Diverged {
                step: self.step,
                what: format!("objective is {loss}"),
            });
        }
        if !(self.aux.alpha >= 0.0) || !self.aux.a.is_finite() || !self.aux.b.is_finite() {
            return Err(Error::Diverged {
                step: self.step,
                what: format!("auxiliaries left their domain: {:?}", self.aux),
            });
        }
        self.step += 1;
        Ok(())
    }
}

/// `w ← w − lr·(g + λ_wd·w + γ·(w − w_ref))`, shared by every primal update so
/// that degenerate configurations reproduce each other bit for bit.
pub(crate) fn primal_update(
    params: &mut [f64],
    grads: &[f64],
    reference: &[f64],
    lr: f64,
    weight_decay: f64,
    epoch_decay: f64,
) {
    for ((p, &g), &r) in params.iter_mut().zip(grads).zip(reference) {
        *p -= lr * (g + weight_decay * *p + epoch_decay * (*p - r));
    }
}

/// Scores that are themselves the parameters: the network is bypassed and
/// `score_i = values[i]` for the i-th row of any batch of matching length.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeScores {
    pub values: Vec<f64>,
}

impl ScoreModel for FreeScores {
    fn scores(&self, batch: &Tensor) -> Result<Vec<f64>> {
        if batch.rows() != self.values.len() {
            return Err(Error::Shape(format!(
                "free scores hold {} values, batch has {} rows",
                self.values.len(),
                batch.rows()
            )));
        }
        Ok(self.values.clone())
    }

    fn param_grads(&self, batch: &Tensor, d_scores: &[f64]) -> Result<Vec<f64>> {
        if batch.rows() != d_scores.len() || d_scores.len() != self.values.len() {
            return Err(Error::Shape("free-score gradient length mismatch".into()));
        }
        Ok(d_scores.to_vec())
    }

    fn params(&self) -> Vec<f64> {
        self.values.clone()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.values.len() {
            return Err(Error::Shape("free-score parameter length mismatch".into()));
        }
        self.values.copy_from_slice(params);
        Ok(())
    }

    fn outputs_probabilities(&self) -> bool {
        false
    }
}
