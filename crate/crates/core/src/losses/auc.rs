//! The AUC margin min-max objective and its soft-label (mixup) generalisation.
//!
//! For scores `h`, soft labels `ŷ ∈ [0,1]`, centers `a`, `b`, dual variable
//! `α ≥ 0` and margin `m`:
//!
//! ```text
//! F = Σ(h−a)²ŷ / Σŷ + Σ(h−b)²(1−ŷ) / Σ(1−ŷ)
//!     + 2α(m − Σhŷ/Σŷ + Σh(1−ŷ)/Σ(1−ŷ)) − α²
//! ```
//!
//! Hard labels are the `ŷ ∈ {0,1}` case, so the margin loss is evaluated by the
//! same code path.

use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

pub const DEFAULT_MARGIN: f64 = 1.0;

/// The non-network variables of the min-max objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucAuxiliaries {
    /// Positive-score center.
    pub a: f64,
    /// Negative-score center.
    pub b: f64,
    /// Dual variable, kept non-negative by the optimizers.
    pub alpha: f64,
    /// Margin between the score centers.
    pub margin: f64,
}

impl AucAuxiliaries {
    pub fn new(margin: f64) -> Self {
        AucAuxiliaries {
            a: 0.0,
            b: 0.0,
            alpha: 0.0,
            margin,
        }
    }
}

impl Default for AucAuxiliaries {
    fn default() -> Self {
        Self::new(DEFAULT_MARGIN)
    }
}

/// Features plus soft labels in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftBatch {
    pub features: Tensor,
    pub soft_labels: Vec<f64>,
}

impl SoftBatch {
    pub fn new(features: Tensor, soft_labels: Vec<f64>) -> Result<Self> {
        if features.rows() != soft_labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                soft_labels.len()
            )));
        }
        if let Some(bad) = soft_labels.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(Error::Config(format!("soft label {bad} outside [0,1]")));
        }
        Ok(SoftBatch {
            features,
            soft_labels,
        })
    }

    /// Wraps a hard-labelled batch.
    pub fn from_hard(features: Tensor, labels: &[u8]) -> Result<Self> {
        Self::new(features, labels_to_f64(labels)?)
    }

    pub fn len(&self) -> usize {
        self.soft_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soft_labels.is_empty()
    }
}

pub(crate) fn labels_to_f64(labels: &[u8]) -> Result<Vec<f64>> {
    labels
        .iter()
        .map(|&y| match y {
            0 => Ok(0.0),
            1 => Ok(1.0),
            other => Err(Error::Config(format!("hard label {other} is not 0 or 1"))),
        })
        .collect()
}

/// Soft-weighted first and second moments of the scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftMoments {
    /// `Σŷ`
    pub pos_mass: f64,
    /// `Σ(1−ŷ)`
    pub neg_mass: f64,
    pub pos_mean: f64,
    pub neg_mean: f64,
    /// `Σ(h − pos_mean)²ŷ / Σŷ`
    pub pos_var: f64,
    /// `Σ(h − neg_mean)²(1−ŷ) / Σ(1−ŷ)`
    pub neg_var: f64,
}

impl SoftMoments {
    pub fn compute(scores: &[f64], soft_labels: &[f64]) -> Result<Self> {
        check_inputs(scores, soft_labels)?;
        let (mut pm, mut nm, mut ps, mut ns) = (0.0, 0.0, 0.0, 0.0);
        for (&h, &y) in scores.iter().zip(soft_labels) {
            pm += y;
            nm += 1.0 - y;
            ps += h * y;
            ns += h * (1.0 - y);
        }
        if !(pm > 0.0 && nm > 0.0) {
            return Err(Error::DegenerateBatch {
                pos_mass: pm,
                neg_mass: nm,
            });
        }
        let pos_mean = ps / pm;
        let neg_mean = ns / nm;
        let (mut pv, mut nv) = (0.0, 0.0);
        for (&h, &y) in scores.iter().zip(soft_labels) {
            pv += (h - pos_mean).powi(2) * y;
            nv += (h - neg_mean).powi(2) * (1.0 - y);
        }
        Ok(SoftMoments {
            pos_mass: pm,
            neg_mass: nm,
            pos_mean,
            neg_mean,
            pos_var: pv / pm,
            neg_var: nv / nm,
        })
    }

    /// `pos_mean − neg_mean`
    pub fn gap(&self) -> f64 {
        self.pos_mean - self.neg_mean
    }
}

fn check_inputs(scores: &[f64], soft_labels: &[f64]) -> Result<()> {
    if scores.len() != soft_labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            soft_labels.len()
        )));
    }
    if let Some(bad) = soft_labels.iter().find(|y| !(0.0..=1.0).contains(*y)) {
        return Err(Error::Config(format!("soft label {bad} outside [0,1]")));
    }
    Ok(())
}

/// Partial derivatives of the AUC(-mixup) objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AucGrads {
    pub d_scores: Vec<f64>,
    pub d_a: f64,
    pub d_b: f64,
    pub d_alpha: f64,
}

pub fn auc_mixup_value(scores: &[f64], soft_labels: &[f64], aux: &AucAuxiliaries) -> Result<f64> {
    let mo = SoftMoments::compute(scores, soft_labels)?;
    let (mut pos_sq, mut neg_sq) = (0.0, 0.0);
    for (&h, &y) in scores.iter().zip(soft_labels) {
        pos_sq += (h - aux.a).powi(2) * y;
        neg_sq += (h - aux.b).powi(2) * (1.0 - y);
    }
    Ok(pos_sq / mo.pos_mass
        + neg_sq / mo.neg_mass
        + 2.0 * aux.alpha * (aux.margin - mo.pos_mean + mo.neg_mean)
        - aux.alpha * aux.alpha)
}

/// The hard-label margin loss; conditional means use the per-class counts.
pub fn auc_margin_value(scores: &[f64], labels: &[u8], aux: &AucAuxiliaries) -> Result<f64> {
    auc_mixup_value(scores, &labels_to_f64(labels)?, aux)
}

pub fn auc_mixup_grads(
    scores: &[f64],
    soft_labels: &[f64],
    aux: &AucAuxiliaries,
) -> Result<AucGrads> {
    let mo = SoftMoments::compute(scores, soft_labels)?;
    let d_scores = scores
        .iter()
        .zip(soft_labels)
        .map(|(&h, &y)| {
            2.0 * (h - aux.a) * y / mo.pos_mass
                + 2.0 * (h - aux.b) * (1.0 - y) / mo.neg_mass
                + 2.0 * aux.alpha * ((1.0 - y) / mo.neg_mass - y / mo.pos_mass)
        })
        .collect();
    Ok(AucGrads {
        d_scores,
        d_a: -2.0 * (mo.pos_mean - aux.a),
        d_b: -2.0 * (mo.neg_mean - aux.b),
        d_alpha: 2.0 * (aux.margin - mo.pos_mean + mo.neg_mean) - 2.0 * aux.alpha,
    })
}

pub fn auc_margin_grads(scores: &[f64], labels: &[u8], aux: &AucAuxiliaries) -> Result<AucGrads> {
    auc_mixup_grads(scores, &labels_to_f64(labels)?, aux)
}

/// Closed-form saddle point in the auxiliaries: soft means for `a`, `b` and
/// `α* = max(0, m − a* + b*)`.
pub fn optimal_aux(scores: &[f64], soft_labels: &[f64], margin: f64) -> Result<AucAuxiliaries> {
    let mo = SoftMoments::compute(scores, soft_labels)?;
    Ok(AucAuxiliaries {
        a: mo.pos_mean,
        b: mo.neg_mean,
        alpha: (margin - mo.gap()).max(0.0),
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aux(a: f64, b: f64, alpha: f64, m: f64) -> AucAuxiliaries {
        AucAuxiliaries {
            a,
            b,
            alpha,
            margin: m,
        }
    }

    #[test]
    fn hand_computed_values() {
        let v = auc_mixup_value(&[1.0, 0.0], &[1.0, 0.0], &aux(1.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!(v, 0.0);
        let v = auc_mixup_value(&[1.0, 0.0], &[1.0, 0.0], &aux(1.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(v, -1.0);
        let v = auc_margin_value(&[0.5, 0.5], &[1, 0], &aux(0.5, 0.5, 1.0, 1.0)).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn degenerate_batches_rejected() {
        let e = auc_mixup_value(&[0.1, 0.2], &[0.0, 0.0], &AucAuxiliaries::default());
        assert!(matches!(e, Err(Error::DegenerateBatch { .. })));
        let e = auc_margin_value(&[0.1, 0.2], &[1, 1], &AucAuxiliaries::default());
        assert!(matches!(e, Err(Error::DegenerateBatch { .. })));
        assert!(optimal_aux(&[0.3], &[1.0], 1.0).is_err());
        assert!(matches!(
            auc_mixup_grads(&[0.1], &[0.5, 0.5], &AucAuxiliaries::default()),
            Err(Error::Shape(_))
        ));
        assert!(auc_mixup_value(&[0.1, 0.2], &[1.5, 0.0], &AucAuxiliaries::default()).is_err());
        assert!(auc_margin_value(&[0.1, 0.2], &[2, 0], &AucAuxiliaries::default()).is_err());
    }

    #[test]
    fn optimal_aux_examples() {
        let o = optimal_aux(&[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert_eq!((o.a, o.b, o.alpha), (1.0, 0.0, 0.0));
        let o = optimal_aux(&[0.5, 0.5], &[1.0, 0.0], 1.0).unwrap();
        assert_eq!((o.a, o.b, o.alpha), (0.5, 0.5, 1.0));
        assert_eq!(auc_mixup_value(&[0.5, 0.5], &[1.0, 0.0], &o).unwrap(), 1.0);
    }

    #[test]
    fn first_order_conditions_at_optimum() {
        let scores = [0.2, 0.9, 0.4, 0.7, 0.1];
        let y = [0.3, 1.0, 0.0, 0.8, 0.5];
        let o = optimal_aux(&scores, &y, 1.0).unwrap();
        let g = auc_mixup_grads(&scores, &y, &o).unwrap();
        assert!(g.d_a.abs() < 1e-15);
        assert!(g.d_b.abs() < 1e-15);
        // α* = m − Δ > 0 here, so the dual gradient vanishes too
        assert!(o.alpha > 0.0);
        assert!(g.d_alpha.abs() < 1e-15);
    }

    #[test]
    fn hard_grads_share_the_soft_path() {
        let s = [0.3, -1.2, 2.0, 0.0];
        let l = [1u8, 0, 1, 0];
        let a = aux(0.1, -0.4, 0.6, 1.0);
        assert_eq!(
            auc_margin_grads(&s, &l, &a).unwrap(),
            auc_mixup_grads(&s, &[1.0, 0.0, 1.0, 0.0], &a).unwrap()
        );
    }
}
