//! Experiment configuration in a plain-text `key = value` format.
//!
//! ```text
//! # comments start with '#'
//! dataset = synthetic
//! synthetic_n = 1000
//! methods = ce, aucm, auc_mixup
//! lr_grid = "0.1,0.01,0.001"
//! seeds = 0,1,2
//! ```
//!
//! Values may be wrapped in double quotes. Lists are comma separated. Every
//! key may appear at most once; unknown keys are rejected. Relative paths are
//! resolved against the directory containing the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::{MixupConfig, SyntheticSpec};
use crate::diffcore::Activation;
use crate::error::{Error, Result};
use crate::losses::FocalConfig;
use crate::optim::{Method, TrainConfig};

/// Training sets at or below this size get twice the default epoch budget.
pub const TINY_TRAIN_SIZE: usize = 1000;
pub const DEFAULT_EPOCHS: usize = 100;

/// Every accepted key with a one-line description, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset", "synthetic | csv | binary"),
    ("data_path", "dataset file for csv/binary sources"),
    ("synthetic_n", "number of synthetic examples (default 1000)"),
    ("synthetic_d", "synthetic feature dimension (default 20)"),
    (
        "synthetic_ratio",
        "fraction of synthetic positives (default 0.02)",
    ),
    (
        "synthetic_separation",
        "distance between the cluster means (default 2)",
    ),
    ("synthetic_noise", "per-coordinate noise scale (default 1)"),
    ("synthetic_seed", "generator seed (default 0)"),
    (
        "binarize_threshold",
        "class ids >= threshold become positives",
    ),
    (
        "binarize_ratio",
        "fraction of positives kept after binarization",
    ),
    ("binarize_seed", "subsampling seed (default 0)"),
    (
        "split",
        "train,valid,test fractions (default 0.7,0.15,0.15)",
    ),
    ("split_seed", "stratified split seed (default 0)"),
    (
        "methods",
        "subset of ce, focal, aucm, auc_mixup, ct_auc, ct_mixup (default all)",
    ),
    (
        "lr_grid",
        "learning rates to tune over (default 0.1,0.01,0.001)",
    ),
    (
        "learning_rate",
        "single learning rate; shorthand for a one-point lr_grid",
    ),
    (
        "epochs",
        "epoch count, or auto (default auto: 100, doubled for tiny training sets)",
    ),
    ("batch_size", "minibatch size (default 64)"),
    (
        "pos_fraction",
        "share of positive slots per batch (default 0.5)",
    ),
    (
        "mixup_alpha",
        "Beta(alpha, alpha) shape for mixup (default 1)",
    ),
    ("mixup_lambda", "pin every mixup weight to this value"),
    ("margin", "AUC margin m (default 1)"),
    ("weight_decay", "L2 weight decay (default 1e-4)"),
    (
        "epoch_decay",
        "pull towards the stage reference (default 1e-3)",
    ),
    ("beta1", "compositional gradient averaging (default 0.9)"),
    ("beta2", "compositional parameter averaging (default 0.9)"),
    (
        "inner_steps",
        "inner CE steps per compositional step (default 1)",
    ),
    ("inner_lr", "inner CE step size (default: the outer rate)"),
    ("focal_alpha", "focal loss weight (default 1)"),
    ("focal_gamma", "focal loss exponent (default 2)"),
    ("hidden", "hidden layer widths, or none (default 32)"),
    ("activation", "tanh | relu | identity (default tanh)"),
    (
        "sigmoid_output",
        "squash scores through a sigmoid (default true)",
    ),
    ("seeds", "training seeds (default 0,1,2)"),
    (
        "output_dir",
        "where runs, reports and tables go (default aucmix-out)",
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Csv { path: PathBuf },
    Binary { path: PathBuf },
}

/// Multi-class to binary conversion applied to file datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binarize {
    pub threshold: u32,
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub binarize: Option<Binarize>,
    pub split: (f64, f64, f64),
    pub split_seed: u64,
    pub methods: Vec<Method>,
    pub lr_grid: Vec<f64>,
    /// `None` resolves from the training-set size, see [`resolve_epochs`].
    pub epochs: Option<usize>,
    pub batch_size: usize,
    pub pos_fraction: f64,
    pub mixup_alpha: f64,
    pub mixup_lambda: Option<f64>,
    pub margin: f64,
    pub weight_decay: f64,
    pub epoch_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub inner_steps: usize,
    pub inner_lr: Option<f64>,
    pub focal: FocalConfig,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub sigmoid_output: bool,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

pub fn resolve_epochs(explicit: Option<usize>, n_train: usize) -> usize {
    explicit.unwrap_or(if n_train <= TINY_TRAIN_SIZE {
        2 * DEFAULT_EPOCHS
    } else {
        DEFAULT_EPOCHS
    })
}

impl ExperimentConfig {
    /// Defaults around a given dataset source.
    pub fn new(dataset: DatasetSource) -> Self {
        let template = TrainConfig::new(Method::Aucm);
        ExperimentConfig {
            dataset,
            binarize: None,
            split: (0.7, 0.15, 0.15),
            split_seed: 0,
            methods: Method::ALL.to_vec(),
            lr_grid: vec![0.1, 0.01, 0.001],
            epochs: None,
            batch_size: template.batch_size,
            pos_fraction: template.pos_fraction,
            mixup_alpha: MixupConfig::default().beta_alpha,
            mixup_lambda: None,
            margin: template.margin,
            weight_decay: template.weight_decay,
            epoch_decay: template.epoch_decay,
            beta1: template.pdsca_beta1,
            beta2: template.pdsca_beta2,
            inner_steps: template.inner_steps,
            inner_lr: None,
            focal: FocalConfig::default(),
            hidden: template.hidden,
            activation: template.activation,
            sigmoid_output: template.sigmoid_output,
            seeds: vec![0, 1, 2],
            output_dir: PathBuf::from("aucmix-out"),
        }
    }

    /// The per-run training configuration for one grid cell.
    pub fn train_config(&self, method: Method, seed: u64, lr: f64, epochs: usize) -> TrainConfig {
        TrainConfig {
            lr,
            epochs,
            batch_size: self.batch_size,
            pos_fraction: self.pos_fraction,
            margin: self.margin,
            weight_decay: self.weight_decay,
            epoch_decay: self.epoch_decay,
            pdsca_beta1: self.beta1,
            pdsca_beta2: self.beta2,
            inner_steps: self.inner_steps,
            inner_lr: self.inner_lr,
            mixup: MixupConfig {
                beta_alpha: self.mixup_alpha,
                enabled: method.uses_mixup(),
                pin_lambda: self.mixup_lambda,
            },
            focal: self.focal,
            hidden: self.hidden.clone(),
            activation: self.activation,
            sigmoid_output: self.sigmoid_output,
            seed,
            ..TrainConfig::new(method)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.lr_grid.is_empty() {
            return Err(Error::Config("lr grid is empty".into()));
        }
        for (name, list_len, uniq) in [
            ("methods", self.methods.len(), {
                let mut m = self.methods.clone();
                m.sort();
                m.dedup();
                m.len()
            }),
            ("seeds", self.seeds.len(), {
                let mut s = self.seeds.clone();
                s.sort();
                s.dedup();
                s.len()
            }),
        ] {
            if list_len != uniq {
                return Err(Error::Config(format!("{name} contains duplicates")));
            }
        }
        if self.epochs == Some(0) {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        match &self.dataset {
            DatasetSource::Synthetic(spec) => {
                if self.binarize.is_some() {
                    return Err(Error::Config(
                        "binarization applies to csv/binary datasets only".into(),
                    ));
                }
                if spec.n == 0 || spec.d == 0 {
                    return Err(Error::Config(
                        "synthetic_n and synthetic_d must be positive".into(),
                    ));
                }
            }
            DatasetSource::Csv { path } | DatasetSource::Binary { path } => {
                if !path.is_file() {
                    return Err(Error::Config(format!(
                        "data_path {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        if let Some(b) = self.binarize {
            if !(b.ratio > 0.0 && b.ratio <= 1.0) {
                return Err(Error::Config(format!(
                    "binarize_ratio must lie in (0, 1], got {}",
                    b.ratio
                )));
            }
        }
        for &m in &self.methods {
            for &lr in &self.lr_grid {
                self.train_config(m, 0, lr, 1).validate()?;
            }
        }
        Ok(())
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
        .trim()
}

fn suggest(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .map(|(k, _)| (*k, strsim::jaro_winkler(key, k)))
        .filter(|(_, s)| *s >= 0.8)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

struct Entry {
    line: usize,
    value: String,
}

struct Parser<'a> {
    path: &'a Path,
    entries: BTreeMap<String, Entry>,
}

impl Parser<'_> {
    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key).map(|e| (e.line, e.value))
    }

    fn parse<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.error(line, format!("{key}: expected {what}, got `{v}`"))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<Vec<T>>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => {
                if v.eq_ignore_ascii_case("none") || v.is_empty() {
                    return Ok(Some(Vec::new()));
                }
                v.split(',')
                    .map(|item| {
                        let item = item.trim();
                        item.parse::<T>().map_err(|_| {
                            self.error(
                                line,
                                format!("{key}: expected a list of {what}, got `{item}`"),
                            )
                        })
                    })
                    .collect::<Result<Vec<T>>>()
                    .map(Some)
            }
        }
    }
}

/// Parses config text; `path` is used for diagnostics and to resolve
/// relative paths.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let mut p = Parser {
        path,
        entries: BTreeMap::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(p.error(line, format!("expected `key = value`, got `{content}`")));
        };
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            let hint = suggest(&key)
                .map(|s| format!(" (did you mean `{s}`?)"))
                .unwrap_or_default();
            return Err(p.error(line, format!("unknown key `{key}`{hint}")));
        }
        if let Some(prev) = p.entries.get(&key) {
            return Err(p.error(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        p.entries.insert(
            key,
            Entry {
                line,
                value: unquote(value).to_string(),
            },
        );
    }

    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |s: String| {
        let pb = PathBuf::from(s);
        if pb.is_absolute() {
            pb
        } else {
            base.join(pb)
        }
    };

    let kind_line = p.entries.get("dataset").map(|e| e.line).unwrap_or(1);
    let kind: String = p
        .take("dataset")
        .map(|(_, v)| v.to_ascii_lowercase())
        .ok_or_else(|| p.error(kind_line, "dataset is not set (synthetic, csv or binary)"))?;
    let data_path = p.take("data_path");
    let mut synth = SyntheticSpec {
        n: 1000,
        d: 20,
        imbalance_ratio: 0.02,
        class_separation: 2.0,
        noise: 1.0,
        seed: 0,
    };
    let synth_keys = [
        "synthetic_n",
        "synthetic_d",
        "synthetic_ratio",
        "synthetic_separation",
        "synthetic_noise",
        "synthetic_seed",
    ];
    let synth_line = synth_keys
        .iter()
        .filter_map(|k| p.entries.get(*k).map(|e| e.line))
        .min();
    if let Some(v) = p.parse("synthetic_n", "a count")? {
        synth.n = v;
    }
    if let Some(v) = p.parse("synthetic_d", "a count")? {
        synth.d = v;
    }
    if let Some(v) = p.parse("synthetic_ratio", "a number")? {
        synth.imbalance_ratio = v;
    }
    if let Some(v) = p.parse("synthetic_separation", "a number")? {
        synth.class_separation = v;
    }
    if let Some(v) = p.parse("synthetic_noise", "a number")? {
        synth.noise = v;
    }
    if let Some(v) = p.parse("synthetic_seed", "an integer")? {
        synth.seed = v;
    }

    let dataset = match kind.as_str() {
        "synthetic" => {
            if let Some((line, _)) = data_path {
                return Err(p.error(line, "data_path is not used by synthetic datasets"));
            }
            DatasetSource::Synthetic(synth)
        }
        "csv" | "binary" => {
            if let Some(line) = synth_line {
                return Err(p.error(line, "synthetic_* keys require dataset = synthetic"));
            }
            let (line, raw) = data_path
                .ok_or_else(|| p.error(kind_line, format!("dataset = {kind} needs data_path")))?;
            let path = resolve(raw);
            if !path.is_file() {
                return Err(p.error(line, format!("data_path {} does not exist", path.display())));
            }
            if kind == "csv" {
                DatasetSource::Csv { path }
            } else {
                DatasetSource::Binary { path }
            }
        }
        other => {
            return Err(p.error(
                kind_line,
                format!("dataset must be synthetic, csv or binary, got `{other}`"),
            ))
        }
    };

    let mut cfg = ExperimentConfig::new(dataset);

    let threshold_line = p.entries.get("binarize_threshold").map(|e| e.line);
    let threshold: Option<u32> = p.parse("binarize_threshold", "a class id")?;
    let ratio: Option<f64> = p.parse("binarize_ratio", "a number")?;
    let bseed: Option<u64> = p.parse("binarize_seed", "an integer")?;
    cfg.binarize = match (threshold, ratio) {
        (Some(threshold), ratio) => Some(Binarize {
            threshold,
            ratio: ratio.unwrap_or(1.0),
            seed: bseed.unwrap_or(0),
        }),
        (None, None) if bseed.is_none() => None,
        _ => {
            return Err(p.error(
                threshold_line.unwrap_or(kind_line),
                "binarize_ratio and binarize_seed require binarize_threshold",
            ))
        }
    };

    if let Some((line, v)) = p.take("split") {
        let parts: Vec<f64> = v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| p.error(line, format!("split: expected three fractions, got `{v}`")))?;
        let [a, b, c] = parts[..] else {
            return Err(p.error(line, format!("split: expected three fractions, got `{v}`")));
        };
        cfg.split = (a, b, c);
    }
    if let Some(v) = p.parse("split_seed", "an integer")? {
        cfg.split_seed = v;
    }
    if let Some(v) = p.list::<Method>("methods", "method names")? {
        cfg.methods = v;
    }

    let grid_line = p.entries.get("lr_grid").map(|e| e.line);
    let grid = p.list::<f64>("lr_grid", "numbers")?;
    let single = p.parse::<f64>("learning_rate", "a number")?;
    cfg.lr_grid = match (grid, single) {
        (Some(_), Some(_)) => {
            return Err(p.error(
                grid_line.unwrap_or(1),
                "set either lr_grid or learning_rate, not both",
            ))
        }
        (Some(g), None) => g,
        (None, Some(lr)) => vec![lr],
        (None, None) => cfg.lr_grid,
    };

    if let Some((line, v)) = p.take("epochs") {
        cfg.epochs = if v.eq_ignore_ascii_case("auto") {
            None
        } else {
            Some(v.parse().map_err(|_| {
                p.error(line, format!("epochs: expected a count or auto, got `{v}`"))
            })?)
        };
    }
    if let Some(v) = p.parse("batch_size", "a count")? {
        cfg.batch_size = v;
    }
    if let Some(v) = p.parse("pos_fraction", "a number")? {
        cfg.pos_fraction = v;
    }
    if let Some(v) = p.parse("mixup_alpha", "a number")? {
        cfg.mixup_alpha = v;
    }
    cfg.mixup_lambda = p.parse("mixup_lambda", "a number")?;
    if let Some(v) = p.parse("margin", "a number")? {
        cfg.margin = v;
    }
    if let Some(v) = p.parse("weight_decay", "a number")? {
        cfg.weight_decay = v;
    }
    if let Some(v) = p.parse("epoch_decay", "a number")? {
        cfg.epoch_decay = v;
    }
    if let Some(v) = p.parse("beta1", "a number")? {
        cfg.beta1 = v;
    }
    if let Some(v) = p.parse("beta2", "a number")? {
        cfg.beta2 = v;
    }
    if let Some(v) = p.parse("inner_steps", "a count")? {
        cfg.inner_steps = v;
    }
    cfg.inner_lr = p.parse("inner_lr", "a number")?;
    if let Some(v) = p.parse("focal_alpha", "a number")? {
        cfg.focal.alpha_hat = v;
    }
    if let Some(v) = p.parse("focal_gamma", "a number")? {
        cfg.focal.gamma_hat = v;
    }
    if let Some(v) = p.list::<usize>("hidden", "widths")? {
        cfg.hidden = v;
    }
    if let Some(v) = p.parse("activation", "tanh, relu or identity")? {
        cfg.activation = v;
    }
    if let Some(v) = p.parse("sigmoid_output", "true or false")? {
        cfg.sigmoid_output = v;
    }
    if let Some(v) = p.list::<u64>("seeds", "integers")? {
        cfg.seeds = v;
    }
    cfg.output_dir = resolve(
        p.take("output_dir")
            .map(|(_, v)| v)
            .unwrap_or_else(|| "aucmix-out".into()),
    );
    debug_assert!(
        p.entries.is_empty(),
        "unhandled keys: {:?}",
        p.entries.keys()
    );

    cfg.validate().map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}
