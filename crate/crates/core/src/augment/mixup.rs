use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::beta::beta_variate;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::losses::SoftBatch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixupConfig {
    /// Shape of the symmetric `Beta(beta_alpha, beta_alpha)` mixing distribution.
    pub beta_alpha: f64,
    pub enabled: bool,
    /// Replaces every draw with a fixed λ. Used to check that λ ∈ {0, 1}
    /// reduces mixup training to hard-label training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin_lambda: Option<f64>,
}

impl Default for MixupConfig {
    fn default() -> Self {
        MixupConfig {
            beta_alpha: 1.0,
            enabled: true,
            pin_lambda: None,
        }
    }
}

impl MixupConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_alpha > 0.0 && self.beta_alpha.is_finite()) {
            return Err(Error::Config(format!(
                "mixup beta_alpha must lie in (0, inf), got {}",
                self.beta_alpha
            )));
        }
        if let Some(l) = self.pin_lambda {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::Config(format!("pinned lambda {l} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// One mixing weight `λ ~ Beta(beta_alpha, beta_alpha)`.
pub fn sample_lambda<R: Rng + ?Sized>(cfg: &MixupConfig, rng: &mut R) -> f64 {
    match cfg.pin_lambda {
        Some(l) => l,
        None => beta_variate(cfg.beta_alpha, cfg.beta_alpha, rng),
    }
}

#[inline]
fn mix(lambda: f64, x: f64, y: f64) -> f64 {
    if lambda == 1.0 || (x == y && lambda != 0.0) {
        x
    } else if lambda == 0.0 {
        y
    } else {
        // rounding can step one ulp outside the parents' segment
        (lambda * x + (1.0 - lambda) * y).clamp(x.min(y), x.max(y))
    }
}

/// Convex combination of two batches row by row with the given weights.
pub fn mixup_with_lambdas(
    x_a: &Tensor,
    y_a: &[f64],
    x_b: &Tensor,
    y_b: &[f64],
    lambdas: &[f64],
) -> Result<SoftBatch> {
    if x_a.shape() != x_b.shape() || y_a.len() != y_b.len() || y_a.len() != x_a.rows() {
        return Err(Error::Shape(format!(
            "mixup parents differ: {:?}/{} vs {:?}/{}",
            x_a.shape(),
            y_a.len(),
            x_b.shape(),
            y_b.len()
        )));
    }
    if lambdas.len() != x_a.rows() {
        return Err(Error::Shape(format!(
            "{} lambdas for {} rows",
            lambdas.len(),
            x_a.rows()
        )));
    }
    let mut features = Tensor::zeros(x_a.rows(), x_a.cols());
    for (r, &l) in lambdas.iter().enumerate() {
        for ((d, &p), &q) in features
            .row_mut(r)
            .iter_mut()
            .zip(x_a.row(r))
            .zip(x_b.row(r))
        {
            *d = mix(l, p, q);
        }
    }
    let labels = lambdas
        .iter()
        .zip(y_a.iter().zip(y_b))
        .map(|(&l, (&p, &q))| mix(l, p, q))
        .collect();
    SoftBatch::new(features, labels)
}

/// Mixes two batches with one fresh λ per row.
pub fn mixup_batch<R: Rng + ?Sized>(
    x_a: &Tensor,
    y_a: &[f64],
    x_b: &Tensor,
    y_b: &[f64],
    cfg: &MixupConfig,
    rng: &mut R,
) -> Result<SoftBatch> {
    let lambdas: Vec<f64> = (0..x_a.rows()).map(|_| sample_lambda(cfg, rng)).collect();
    mixup_with_lambdas(x_a, y_a, x_b, y_b, &lambdas)
}

/// Mixes a batch with a shuffled copy of itself. The shuffle is drawn before
/// the λs, both from `rng`.
pub fn mixup_shuffled<R: Rng + ?Sized>(
    x: &Tensor,
    y: &[f64],
    cfg: &MixupConfig,
    rng: &mut R,
) -> Result<SoftBatch> {
    let mut perm: Vec<usize> = (0..x.rows()).collect();
    perm.shuffle(rng);
    let x_b = x.select_rows(&perm);
    let y_b: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
    mixup_batch(x, y, &x_b, &y_b, cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parents() -> (Tensor, Vec<f64>, Tensor, Vec<f64>) {
        (
            Tensor::from_rows(&[[1.0, -2.0], [0.0, 4.0]]).unwrap(),
            vec![1.0, 0.0],
            Tensor::from_rows(&[[3.0, 2.0], [-0.0, 4.0]]).unwrap(),
            vec![0.0, 0.0],
        )
    }

    #[test]
    fn lambda_one_returns_first_parent() {
        let (xa, ya, xb, yb) = parents();
        let s = mixup_with_lambdas(&xa, &ya, &xb, &yb, &[1.0, 1.0]).unwrap();
        assert_eq!(s.features, xa);
        assert_eq!(s.soft_labels, ya);
        let s = mixup_with_lambdas(&xa, &ya, &xb, &yb, &[0.0, 0.0]).unwrap();
        assert_eq!(s.features, xb);
        assert_eq!(s.soft_labels, yb);
    }

    #[test]
    fn half_lambda_gives_midpoint() {
        let (xa, ya, xb, yb) = parents();
        let s = mixup_with_lambdas(&xa, &ya, &xb, &yb, &[0.5, 0.5]).unwrap();
        assert_eq!(s.features.row(0), &[2.0, 0.0]);
        assert_eq!(s.soft_labels, vec![0.5, 0.0]);
    }

    #[test]
    fn shared_labels_stay_exact() {
        let x = Tensor::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = vec![1.0, 1.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = mixup_shuffled(&x, &y, &MixupConfig::default(), &mut rng).unwrap();
        assert!(s.soft_labels.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn pinned_lambda_draws_nothing() {
        let cfg = MixupConfig {
            pin_lambda: Some(0.25),
            ..MixupConfig::default()
        };
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let b = a.clone();
        assert_eq!(sample_lambda(&cfg, &mut a), 0.25);
        assert_eq!(a, b);
    }

    #[test]
    fn shape_and_config_errors() {
        let (xa, ya, _, _) = parents();
        let xb = Tensor::zeros(3, 2);
        assert!(mixup_with_lambdas(&xa, &ya, &xb, &[0.0; 3], &[0.5; 2]).is_err());
        assert!(mixup_with_lambdas(&xa, &ya, &xa, &ya, &[0.5]).is_err());
        let bad = MixupConfig {
            beta_alpha: 0.0,
            ..MixupConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
