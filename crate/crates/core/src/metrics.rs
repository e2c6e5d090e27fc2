//! Exact ROC AUC and run summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Positive/negative pairs with equal scores.
    pub ties: u64,
}

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::UndefinedMetric("non-finite score".into()));
    }
    let mut n_pos = 0;
    for &y in labels {
        match y {
            0 => {}
            1 => n_pos += 1,
            other => return Err(Error::Config(format!("hard label {other} is not 0 or 1"))),
        }
    }
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    Ok((n_pos, n_neg))
}

/// AUC from the Mann–Whitney rank-sum with midranks for ties. O(n log n).
pub fn auc_rank(scores: &[f64], labels: &[u8]) -> Result<EvalResult> {
    let (n_pos, n_neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    // Ranks are 1-based; a tie group spanning positions [start, end) shares
    // the midrank (start + 1 + end) / 2. Twice the rank sum stays integral.
    let mut twice_rank_sum: u64 = 0;
    let mut ties: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        // total_cmp would separate -0.0 from 0.0; those are ties for AUC
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let group_pos = order[start..end]
            .iter()
            .filter(|&&i| labels[i] == 1)
            .count() as u64;
        let group_neg = (end - start) as u64 - group_pos;
        ties += group_pos * group_neg;
        twice_rank_sum += group_pos * (start + 1 + end) as u64;
        start = end;
    }
    let np = n_pos as u64;
    let twice_u = twice_rank_sum - np * (np + 1);
    let auc = twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Ok(EvalResult {
        auc,
        n_pos,
        n_neg,
        ties,
    })
}

/// Brute-force `(1/(N₊N₋)) Σ [𝕀(h⁺ > h⁻) + ½𝕀(h⁺ = h⁻)]` over all pairs.
pub fn auc_pairwise_oracle(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(scores, labels)?;
    let mut twice_wins: u64 = 0;
    for (i, &sp) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sn) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            if sp > sn {
                twice_wins += 2;
            } else if sp == sn {
                twice_wins += 1;
            }
        }
    }
    Ok(twice_wins as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Sample mean and standard deviation (n−1 denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Config(format!(
                "mean±std needs at least 2 runs, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(MeanStd {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }

    /// Two-decimal `mean±std`, e.g. `86.56±0.02`.
    pub fn display(&self) -> String {
        format!("{:.2}±{:.2}", self.mean, self.std)
    }
}
