use serde::{Deserialize, Serialize};

use super::schedule::lr_factor;
use super::state::TrainState;
use crate::diffcore::{ScoreModel, Tensor};
use crate::error::{Error, Result};
use crate::losses::{ce_value_and_grads, focal_value_and_grads, FocalConfig, ScoreSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty added to the gradient.
    pub weight_decay: f64,
    pub total_steps: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
            total_steps: 1,
        }
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// In-place update of `params` with learning rate `lr`.
    pub fn update(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        lr: f64,
        cfg: &AdamConfig,
    ) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "adam state for {} parameters got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i] + cfg.weight_decay * params[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        Ok(())
    }
}

/// The per-sample loss an Adam run minimises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PerSampleLoss {
    Ce,
    Focal(FocalConfig),
}

/// One Adam step on a per-sample loss; returns the loss before the update.
pub fn adam_step<M: ScoreModel>(
    state: &mut TrainState<M>,
    adam: &mut AdamState,
    features: &Tensor,
    targets: &[f64],
    loss: PerSampleLoss,
    cfg: &AdamConfig,
) -> Result<f64> {
    let lr = cfg.lr * lr_factor(state.step, cfg.total_steps);
    let space = if state.model.outputs_probabilities() {
        ScoreSpace::Probability
    } else {
        ScoreSpace::Logit
    };
    let scores = state.model.scores(features)?;
    let (value, d) = match loss {
        PerSampleLoss::Ce => ce_value_and_grads(&scores, targets, space)?,
        PerSampleLoss::Focal(f) => focal_value_and_grads(&scores, targets, space, &f)?,
    };
    let grads = state.model.param_grads(features, &d)?;
    let mut params = state.model.params();
    adam.update(&mut params, &grads, lr, cfg)?;
    state.model.set_params(&params)?;
    state.finish_step(value)?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_step_size_changes_nothing() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        s.update(&mut p, &[0.3, 0.1, -7.0], 0.0, &cfg).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn zero_gradient_only_decays() {
        let cfg = AdamConfig {
            weight_decay: 1e-2,
            ..AdamConfig::default()
        };
        let mut s = AdamState::new(2);
        let mut p = vec![1.0, -1.0];
        for _ in 0..200 {
            let before = p.clone();
            s.update(&mut p, &[0.0, 0.0], 1e-2, &cfg).unwrap();
            assert!(p[0] < before[0] && p[0] > 0.0);
            assert!(p[1] > before[1] && p[1] < 0.0);
        }
        let mut none = AdamConfig {
            weight_decay: 0.0,
            ..cfg
        };
        none.lr = 1e-2;
        let mut s = AdamState::new(1);
        let mut q = vec![0.7];
        s.update(&mut q, &[0.0], 1e-2, &none).unwrap();
        assert_eq!(q, vec![0.7]);
    }

    #[test]
    fn converges_on_a_quadratic() {
        // f(x) = (x − 3)², minimiser 3
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut s = AdamState::new(1);
        let mut x = vec![-4.0];
        for t in 0..20_000 {
            let lr = if t < 10_000 { 0.05 } else { 0.001 };
            let g = 2.0 * (x[0] - 3.0);
            s.update(&mut x, &[g], lr, &cfg).unwrap();
        }
        assert!((x[0] - 3.0).abs() < 1e-4, "{}", x[0]);
    }
}
