//! The full training loop: sampler → optional mixup → loss → optimizer →
//! schedule, with per-epoch validation and best-validation model selection.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState, PerSampleLoss};
use super::pdsca::{pdsca_step, InnerBatch, PdscaConfig};
use super::pesg::{pesg_step, PesgConfig};
use super::state::TrainState;
use crate::augment::{mixup_shuffled, DataSplits, DualSampler, MixupConfig, SamplerConfig};
use crate::diffcore::{Activation, DiffModel, Tensor};
use crate::error::{Error, Result};
use crate::losses::{labels_to_f64, AucAuxiliaries, FocalConfig, SoftBatch};
use crate::metrics::auc_rank;

/// Training methods, named after the rows of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ce,
    Focal,
    Aucm,
    AucMixup,
    CtAuc,
    CtMixup,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ce,
        Method::Focal,
        Method::Aucm,
        Method::AucMixup,
        Method::CtAuc,
        Method::CtMixup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ce => "ce",
            Method::Focal => "focal",
            Method::Aucm => "aucm",
            Method::AucMixup => "auc_mixup",
            Method::CtAuc => "ct_auc",
            Method::CtMixup => "ct_mixup",
        }
    }

    pub fn uses_mixup(self) -> bool {
        matches!(self, Method::AucMixup | Method::CtMixup)
    }

    pub fn is_compositional(self) -> bool {
        matches!(self, Method::CtAuc | Method::CtMixup)
    }

    pub fn is_auc(self) -> bool {
        !matches!(self, Method::Ce | Method::Focal)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected one of ce, focal, aucm, auc_mixup, ct_auc, ct_mixup)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub pos_fraction: f64,
    pub margin: f64,
    pub weight_decay: f64,
    pub epoch_decay: f64,
    pub pdsca_beta1: f64,
    pub pdsca_beta2: f64,
    pub inner_steps: usize,
    /// Inner CE step size of compositional runs; `None` follows the outer rate.
    pub inner_lr: Option<f64>,
    /// Compositional mixup runs take their inner CE step on the mixed batch
    /// (soft targets) instead of the hard batch.
    pub inner_soft_ce: bool,
    pub mixup: MixupConfig,
    pub focal: FocalConfig,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub sigmoid_output: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(method: Method) -> Self {
        TrainConfig {
            method,
            lr: 0.1,
            epochs: 100,
            batch_size: 64,
            pos_fraction: 0.5,
            margin: 1.0,
            weight_decay: 1e-4,
            epoch_decay: 1e-3,
            pdsca_beta1: 0.9,
            pdsca_beta2: 0.9,
            inner_steps: 1,
            inner_lr: None,
            inner_soft_ce: false,
            mixup: MixupConfig {
                enabled: method.uses_mixup(),
                ..MixupConfig::default()
            },
            focal: FocalConfig::default(),
            hidden: vec![32],
            activation: Activation::Tanh,
            sigmoid_output: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mixup.enabled != self.method.uses_mixup() {
            return Err(Error::Config(format!(
                "mixup is {} but method {} {} it",
                if self.mixup.enabled {
                    "enabled"
                } else {
                    "disabled"
                },
                self.method,
                if self.method.uses_mixup() {
                    "requires"
                } else {
                    "does not use"
                }
            )));
        }
        if self.inner_soft_ce && self.method != Method::CtMixup {
            return Err(Error::Config(
                "inner_soft_ce only applies to method ct_mixup".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        self.mixup.validate()?;
        self.focal.validate()?;
        self.sampler_config().validate()?;
        self.pdsca_config(1).validate()?;
        Ok(())
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            batch_size: self.batch_size,
            pos_fraction: self.pos_fraction,
            seed: self.seed,
        }
    }

    pub fn pesg_config(&self, total_steps: u64) -> PesgConfig {
        PesgConfig {
            lr: self.lr,
            margin: self.margin,
            weight_decay: self.weight_decay,
            epoch_decay: self.epoch_decay,
            total_steps,
        }
    }

    pub fn pdsca_config(&self, total_steps: u64) -> PdscaConfig {
        PdscaConfig {
            outer: self.pesg_config(total_steps),
            beta1: self.pdsca_beta1,
            beta2: self.pdsca_beta2,
            inner_steps: self.inner_steps,
            inner_lr: self.inner_lr,
        }
    }

    pub fn adam_config(&self, total_steps: u64) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            total_steps,
            ..AdamConfig::default()
        }
    }

    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        std::iter::once(input_dim)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(1))
            .collect()
    }
}

/// Emitted after every optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    pub step: u64,
    pub epoch: usize,
    pub loss: f64,
    /// Auxiliaries after the step; `None` for CE/focal runs.
    pub aux: Option<AucAuxiliaries>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Model at the best-validation epoch.
    pub best_model: DiffModel,
    /// Final state after the last step.
    pub final_state: TrainState<DiffModel>,
    /// Mean optimizer objective per epoch.
    pub train_loss: Vec<f64>,
    pub valid_auc: Vec<f64>,
    /// Zero-based index of the selected epoch.
    pub best_epoch: usize,
    pub best_valid_auc: f64,
    pub test_auc: f64,
    pub steps_per_epoch: usize,
}

/// Independent RNG streams per concern, so that e.g. mixup draws never shift
/// the sampler's sequence.
pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const STREAM_INIT: u64 = 0;
const STREAM_SAMPLER: u64 = 1;
const STREAM_MIXUP: u64 = 2;

pub fn train(splits: &DataSplits, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_observer(splits, cfg, |_| {})
}

pub fn train_with_observer(
    splits: &DataSplits,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&StepEvent),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train = &splits.train;
    let dims = cfg.layer_dims(train.dim());
    let model =
        DiffModel::init_with_rng(&dims, cfg.activation, &mut stream(cfg.seed, STREAM_INIT))?
            .with_sigmoid(cfg.sigmoid_output);
    let sampler = DualSampler::new(train, cfg.sampler_config())?;
    let mut sampler_rng = stream(cfg.seed, STREAM_SAMPLER);
    let mut mixup_rng = stream(cfg.seed, STREAM_MIXUP);

    let steps_per_epoch = train.len().div_ceil(cfg.batch_size).max(1);
    let total_steps = (steps_per_epoch * cfg.epochs) as u64;
    let pesg = cfg.pesg_config(total_steps);
    let pdsca = cfg.pdsca_config(total_steps);
    let adam_cfg = cfg.adam_config(total_steps);
    let per_sample = match cfg.method {
        Method::Focal => PerSampleLoss::Focal(cfg.focal),
        _ => PerSampleLoss::Ce,
    };

    let mut state = TrainState::new(model, cfg.margin);
    let mut adam = AdamState::new(state.model.num_params());
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut valid_auc = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, DiffModel)> = None;

    for epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        for _ in 0..steps_per_epoch {
            let idx = sampler.sample(&mut sampler_rng);
            let x = train.features().select_rows(&idx);
            let hard: Vec<u8> = idx.iter().map(|&i| train.labels()[i]).collect();
            let y = labels_to_f64(&hard)?;
            let loss = match cfg.method {
                Method::Ce | Method::Focal => {
                    adam_step(&mut state, &mut adam, &x, &y, per_sample, &adam_cfg)?
                }
                Method::Aucm => pesg_step(&mut state, &SoftBatch::new(x, y)?, &pesg)?,
                Method::AucMixup => {
                    let soft = mixup_shuffled(&x, &y, &cfg.mixup, &mut mixup_rng)?;
                    pesg_step(&mut state, &soft, &pesg)?
                }
                Method::CtAuc => {
                    let outer = SoftBatch::new(x.clone(), y.clone())?;
                    let inner = InnerBatch {
                        features: &x,
                        targets: &y,
                    };
                    pdsca_step(&mut state, &outer, inner, &pdsca)?
                }
                Method::CtMixup => {
                    let soft = mixup_shuffled(&x, &y, &cfg.mixup, &mut mixup_rng)?;
                    let inner = if cfg.inner_soft_ce {
                        InnerBatch {
                            features: &soft.features,
                            targets: &soft.soft_labels,
                        }
                    } else {
                        InnerBatch {
                            features: &x,
                            targets: &y,
                        }
                    };
                    pdsca_step(&mut state, &soft, inner, &pdsca)?
                }
            };
            loss_sum += loss;
            observer(&StepEvent {
                step: state.step,
                epoch,
                loss,
                aux: cfg.method.is_auc().then_some(state.aux),
            });
        }
        train_loss.push(loss_sum / steps_per_epoch as f64);

        let auc = evaluate(&state.model, splits.valid.features(), splits.valid.labels())?;
        valid_auc.push(auc);
        if best.as_ref().is_none_or(|(_, b, _)| auc > *b) {
            best = Some((epoch, auc, state.model.clone()));
        }
    }

    let (best_epoch, best_valid_auc, best_model) = best.expect("at least one epoch");
    let test_auc = evaluate(&best_model, splits.test.features(), splits.test.labels())?;
    Ok(TrainOutcome {
        best_model,
        final_state: state,
        train_loss,
        valid_auc,
        best_epoch,
        best_valid_auc,
        test_auc,
        steps_per_epoch,
    })
}

/// AUC of `model` on a labelled feature matrix.
pub fn evaluate(model: &DiffModel, features: &Tensor, labels: &[u8]) -> Result<f64> {
    let scores = model.scores(features)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Diverged {
            step: 0,
            what: "model produced non-finite scores".into(),
        });
    }
    Ok(auc_rank(&scores, labels)?.auc)
}
