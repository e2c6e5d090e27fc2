//! Per-sample baselines: binary cross-entropy and focal loss.
//!
//! Both accept targets in `[0,1]` (hard labels as 0/1) and return the batch
//! mean together with its gradient with respect to each score.

use serde::{Deserialize, Serialize};

use crate::diffcore::sigmoid;
use crate::error::{Error, Result};

/// How the scores passed to a per-sample loss should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreSpace {
    /// Scores are already probabilities in (0,1).
    Probability,
    /// Scores are logits; a sigmoid is applied internally.
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalConfig {
    /// Class weight.
    pub alpha_hat: f64,
    /// Focusing exponent on `(1 − p_t)`.
    pub gamma_hat: f64,
}

impl Default for FocalConfig {
    fn default() -> Self {
        FocalConfig {
            alpha_hat: 1.0,
            gamma_hat: 2.0,
        }
    }
}

impl FocalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_hat > 0.0) || !(self.gamma_hat >= 0.0) {
            return Err(Error::Config(format!(
                "focal parameters must satisfy alpha_hat > 0, gamma_hat >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

// Probabilities are clamped away from {0,1} only where a division would blow up.
const PROB_FLOOR: f64 = 1e-15;

fn check(scores: &[f64], targets: &[f64]) -> Result<()> {
    if scores.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} targets",
            scores.len(),
            targets.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if let Some(bad) = targets.iter().find(|y| !(0.0..=1.0).contains(*y)) {
        return Err(Error::Config(format!("target {bad} outside [0,1]")));
    }
    Ok(())
}

/// `(ln p, ln(1−p), p)` for a score in the given space.
#[inline]
fn log_probs(s: f64, space: ScoreSpace) -> (f64, f64, f64) {
    match space {
        ScoreSpace::Probability => (
            s.max(f64::MIN_POSITIVE).ln(),
            (1.0 - s).max(f64::MIN_POSITIVE).ln(),
            s,
        ),
        ScoreSpace::Logit => {
            // ln σ(s) = −softplus(−s), ln(1−σ(s)) = −softplus(s)
            let softplus = |z: f64| z.max(0.0) + (-z.abs()).exp().ln_1p();
            (-softplus(-s), -softplus(s), sigmoid(s))
        }
    }
}

/// Mean binary cross-entropy and its per-score gradient.
pub fn ce_value_and_grads(
    scores: &[f64],
    targets: &[f64],
    space: ScoreSpace,
) -> Result<(f64, Vec<f64>)> {
    check(scores, targets)?;
    let n = scores.len() as f64;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(scores.len());
    for (&s, &y) in scores.iter().zip(targets) {
        let (ln_p, ln_q, p) = log_probs(s, space);
        let mut loss = 0.0;
        if y > 0.0 {
            loss += y * ln_p;
        }
        if y < 1.0 {
            loss += (1.0 - y) * ln_q;
        }
        total += -loss;
        let g = match space {
            ScoreSpace::Logit => p - y,
            ScoreSpace::Probability => {
                let pc = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
                (pc - y) / (pc * (1.0 - pc))
            }
        };
        grads.push(g / n);
    }
    Ok((total / n, grads))
}

/// Mean focal loss `−α̂[y(1−p)^γ̂ ln p + (1−y)p^γ̂ ln(1−p)]` and its gradient.
pub fn focal_value_and_grads(
    scores: &[f64],
    targets: &[f64],
    space: ScoreSpace,
    cfg: &FocalConfig,
) -> Result<(f64, Vec<f64>)> {
    check(scores, targets)?;
    cfg.validate()?;
    let (alpha, gamma) = (cfg.alpha_hat, cfg.gamma_hat);
    let n = scores.len() as f64;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(scores.len());
    for (&s, &y) in scores.iter().zip(targets) {
        let (ln_p, ln_q, p) = log_probs(s, space);
        let q = 1.0 - p;
        let mut loss = 0.0;
        if y > 0.0 {
            loss += y * q.powf(gamma) * ln_p;
        }
        if y < 1.0 {
            loss += (1.0 - y) * p.powf(gamma) * ln_q;
        }
        total += -alpha * loss;

        // Derivative with respect to the logit; the probability-space gradient
        // divides by dp/ds = p(1−p).
        let mut d_logit = 0.0;
        if y > 0.0 {
            d_logit += y * (q.powf(gamma + 1.0) - gamma * p * q.powf(gamma) * ln_p);
        }
        if y < 1.0 {
            d_logit += (1.0 - y) * (gamma * q * p.powf(gamma) * ln_q - p.powf(gamma + 1.0));
        }
        d_logit *= -alpha;
        let g = match space {
            ScoreSpace::Logit => d_logit,
            ScoreSpace::Probability => {
                let pc = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
                d_logit / (pc * (1.0 - pc))
            }
        };
        grads.push(g / n);
    }
    Ok((total / n, grads))
}
