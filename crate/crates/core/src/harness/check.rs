//! Quick self-check: randomized oracle and property checks that run in about
//! a second, for verifying a build on a new machine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::{
    dual_sample, generate_synthetic, mixup_with_lambdas, SamplerConfig, SyntheticSpec,
};
use crate::diffcore::{finite_diff_grad, Activation, DiffModel, Tensor};
use crate::error::Result;
use crate::losses::{
    auc_margin_value, auc_mixup_grads, auc_mixup_value, optimal_aux, AucAuxiliaries, SoftMoments,
};
use crate::metrics::{auc_pairwise_oracle, auc_rank};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn random_hard_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    y[0] = 1;
    y[1] = 0;
    y
}

fn auc_oracle(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for case in 0..300 {
        let n = rng.random_range(2..=200);
        let y = random_hard_labels(rng, n);
        // every third case draws from a handful of levels to force ties
        let s: Vec<f64> = (0..n)
            .map(|_| {
                if case % 3 == 0 {
                    rng.random_range(0..4) as f64
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        worst = worst.max((auc_rank(&s, &y)?.auc - auc_pairwise_oracle(&s, &y)?).abs());
    }
    Ok(CheckResult {
        name: "auc rank statistic matches pairwise enumeration",
        passed: worst < 1e-12,
        detail: format!("max difference {worst:.2e} over 300 cases"),
    })
}

fn hard_label_equivalence(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut mismatches = 0;
    for _ in 0..300 {
        let n = rng.random_range(2..=64);
        let y = random_hard_labels(rng, n);
        let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let aux = AucAuxiliaries {
            a: rng.random(),
            b: rng.random(),
            alpha: rng.random_range(0.0..2.0),
            margin: 1.0,
        };
        let soft: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        if auc_mixup_value(&s, &soft, &aux)? != auc_margin_value(&s, &y, &aux)? {
            mismatches += 1;
        }
    }
    Ok(CheckResult {
        name: "soft objective equals margin objective on hard labels",
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches over 300 batches"),
    })
}

fn saddle_closed_form(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let n = rng.random_range(2..=64);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        y[0] = 1.0;
        y[1] = 0.0;
        let m = rng.random_range(0.1..2.0);
        let aux = optimal_aux(&s, &y, m)?;
        let mo = SoftMoments::compute(&s, &y)?;
        let expect = mo.pos_var + mo.neg_var + (m - mo.gap()).max(0.0).powi(2);
        worst = worst.max((auc_mixup_value(&s, &y, &aux)? - expect).abs());
    }
    Ok(CheckResult {
        name: "objective at the optimal auxiliaries has its closed form",
        passed: worst < 1e-10,
        detail: format!("max difference {worst:.2e} over 300 batches"),
    })
}

fn loss_gradients(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=16);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        y[0] = 1.0;
        y[1] = 0.0;
        let aux = AucAuxiliaries {
            a: rng.random_range(-1.0..1.0),
            b: rng.random_range(-1.0..1.0),
            alpha: rng.random_range(0.0..2.0),
            margin: 1.0,
        };
        let g = auc_mixup_grads(&s, &y, &aux)?;
        let f = |s: &[f64], aux: &AucAuxiliaries| auc_mixup_value(s, &y, aux);
        for i in 0..n {
            let (mut p, mut q) = (s.clone(), s.clone());
            p[i] += eps;
            q[i] -= eps;
            let fd = (f(&p, &aux)? - f(&q, &aux)?) / (2.0 * eps);
            worst = worst.max(rel_err(g.d_scores[i], fd));
        }
        let shifted = |which: usize, h: f64| {
            let mut x = aux;
            match which {
                0 => x.a += h,
                1 => x.b += h,
                _ => x.alpha += h,
            }
            x
        };
        for (which, analytic) in [g.d_a, g.d_b, g.d_alpha].into_iter().enumerate() {
            let fd = (f(&s, &shifted(which, eps))? - f(&s, &shifted(which, -eps))?) / (2.0 * eps);
            worst = worst.max(rel_err(analytic, fd));
        }
    }
    Ok(CheckResult {
        name: "loss gradients match finite differences",
        passed: worst < 1e-6,
        detail: format!("max relative error {worst:.2e} over 20 instances"),
    })
}

fn model_gradients(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let act = [Activation::Tanh, Activation::Identity][case as usize % 2];
        let d = rng.random_range(1..=5);
        let dims = [d, rng.random_range(1..=6), 1];
        let model = DiffModel::init(&dims, act, case)?.with_sigmoid(case % 4 < 2);
        let n = rng.random_range(1..=6);
        let x = Tensor::from_vec(
            n,
            d,
            (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )?;
        let ds = Tensor::column((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        let exact = model.backward(&x, &ds)?.flatten();
        let fd = finite_diff_grad(&model, &x, &ds, 1e-5)?.flatten();
        for (a, b) in exact.iter().zip(&fd) {
            worst = worst.max(rel_err(*a, *b));
        }
    }
    Ok(CheckResult {
        name: "network backward pass matches finite differences",
        passed: worst < 1e-6,
        detail: format!("max relative error {worst:.2e} over 20 models"),
    })
}

fn sampler_guarantee(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut bad = 0;
    for (k, ratio) in [0.5, 0.1, 0.02].into_iter().enumerate() {
        let ds = generate_synthetic(&SyntheticSpec {
            n: 500,
            d: 2,
            imbalance_ratio: ratio,
            class_separation: 1.0,
            noise: 1.0,
            seed: k as u64,
        })?;
        let cfg = SamplerConfig::default();
        for _ in 0..1000 {
            let idx = dual_sample(&ds, &cfg, rng)?;
            let pos = idx.iter().filter(|&&i| ds.labels()[i] == 1).count();
            if pos == 0 || pos == idx.len() {
                bad += 1;
            }
        }
    }
    Ok(CheckResult {
        name: "every sampled batch holds both classes",
        passed: bad == 0,
        detail: format!("{bad} one-class batches out of 3000"),
    })
}

fn mixup_identity(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let x = Tensor::from_vec(8, 3, (0..24).map(|_| rng.random::<f64>()).collect())?;
    let z = Tensor::from_vec(8, 3, (0..24).map(|_| rng.random::<f64>()).collect())?;
    let y: Vec<f64> = (0..8).map(|i| (i % 2) as f64).collect();
    let y2: Vec<f64> = y.iter().rev().copied().collect();
    let ones = mixup_with_lambdas(&x, &y, &z, &y2, &[1.0; 8])?;
    let zeros = mixup_with_lambdas(&x, &y, &z, &y2, &[0.0; 8])?;
    let passed = ones.features == x
        && ones.soft_labels == y
        && zeros.features == z
        && zeros.soft_labels == y2;
    Ok(CheckResult {
        name: "mixup with weight 1 or 0 returns a parent exactly",
        passed,
        detail: String::new(),
    })
}

/// Runs every check with a fixed seed.
pub fn run_checks() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    Ok(vec![
        auc_oracle(&mut rng)?,
        hard_label_equivalence(&mut rng)?,
        saddle_closed_form(&mut rng)?,
        loss_gradients(&mut rng)?,
        model_gradients(&mut rng)?,
        sampler_guarantee(&mut rng)?,
        mixup_identity(&mut rng)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_checks().unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
