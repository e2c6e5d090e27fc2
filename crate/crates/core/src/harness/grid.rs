//! Hyperparameter grid runner: method × seed × learning rate.
//!
//! Layout of the output directory:
//!
//! - `runs/<fingerprint>.json`: one [`RunReport`] per training run, plus a
//!   `<fingerprint>.time` sidecar holding the wall-clock seconds;
//! - `selected/<method>_seed<seed>.json`: the [`Selection`] for each pair;
//! - `results.csv`: one row per selection.
//!
//! Runs whose report already exists are not retrained, so an interrupted grid
//! resumes where it stopped.

use std::collections::HashSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{resolve_epochs, Binarize, DatasetSource, ExperimentConfig};
use super::report::{
    fingerprint, read_json, to_json_bytes, write_atomic, Candidate, RunReport, Selection,
    SCHEMA_VERSION,
};
use crate::augment::{
    binarize_imbalance, generate_synthetic, read_binary, read_csv, split_stratified, DataSplits,
    LabeledDataset, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::optim::{train, Method, TrainConfig};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses one per core.
    pub jobs: usize,
    pub quiet: bool,
    /// Added to every configured seed.
    pub seed_offset: u64,
    /// Restricts the grid to these methods.
    pub methods: Option<Vec<Method>>,
    /// Stop after this many new training runs, leaving the grid unfinished
    /// exactly as a killed process would.
    pub max_new_runs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    /// Empty when the grid was interrupted.
    pub selections: Vec<Selection>,
    /// Training runs executed by this call.
    pub trained: usize,
    /// Distinct runs skipped because their report already existed.
    pub cached: usize,
    /// Training runs (new or cached) that recorded an error.
    pub failed_runs: usize,
    pub interrupted: bool,
    pub out_dir: PathBuf,
}

impl GridOutcome {
    /// True when some (method, seed) pair has no successful run at all, or
    /// any individual run failed.
    pub fn has_failures(&self) -> bool {
        self.failed_runs > 0 || self.selections.iter().any(|s| !s.report.succeeded())
    }
}

/// Identity of the data a run saw. File datasets are identified by content.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetKey {
    Synthetic(SyntheticSpec),
    File {
        format: &'static str,
        sha256: String,
        binarize: Option<Binarize>,
    },
}

#[derive(Serialize)]
struct RunKey<'a> {
    schema_version: u32,
    dataset: &'a DatasetKey,
    split: (f64, f64, f64),
    split_seed: u64,
    train: &'a TrainConfig,
}

/// Loads (or generates) the dataset and splits it.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(DataSplits, DatasetKey)> {
    let (ds, key): (LabeledDataset, DatasetKey) = match &cfg.dataset {
        DatasetSource::Synthetic(spec) => (generate_synthetic(spec)?, DatasetKey::Synthetic(*spec)),
        DatasetSource::Csv { path } | DatasetSource::Binary { path } => {
            let is_csv = matches!(cfg.dataset, DatasetSource::Csv { .. });
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let table = if is_csv {
                read_csv(path)?
            } else {
                read_binary(path)?
            };
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into());
            let ds = match cfg.binarize {
                Some(b) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
                    binarize_imbalance(
                        &table.into_multiclass(name),
                        b.threshold,
                        b.ratio,
                        &mut rng,
                    )?
                }
                None => table.into_binary(name)?,
            };
            let key = DatasetKey::File {
                format: if is_csv { "csv" } else { "binary" },
                sha256: hex::encode(Sha256::digest(&bytes)),
                binarize: cfg.binarize,
            };
            (ds, key)
        }
    };
    Ok((split_stratified(&ds, cfg.split, cfg.split_seed)?, key))
}

struct Cell {
    method: Method,
    seed: u64,
    lr: f64,
    train: TrainConfig,
    fingerprint: String,
}

fn report_path(runs: &Path, fp: &str) -> PathBuf {
    runs.join(format!("{fp}.json"))
}

fn load_cached(runs: &Path, fp: &str) -> Option<RunReport> {
    let r: RunReport = read_json(&report_path(runs, fp)).ok()?;
    (r.schema_version == SCHEMA_VERSION && r.fingerprint == fp).then_some(r)
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Trains one cell; failures become part of the report.
fn execute(splits: &DataSplits, cell: &Cell) -> RunReport {
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        fingerprint: cell.fingerprint.clone(),
        method: cell.method,
        seed: cell.seed,
        lr: cell.lr,
        epochs: cell.train.epochs,
        train_loss: Vec::new(),
        valid_auc: Vec::new(),
        best_epoch: None,
        best_valid_auc: None,
        test_auc: None,
        version: crate::VERSION.to_string(),
        error: None,
    };
    match catch_unwind(AssertUnwindSafe(|| train(splits, &cell.train))) {
        Ok(Ok(o)) => {
            report.train_loss = o.train_loss;
            report.valid_auc = o.valid_auc;
            report.best_epoch = Some(o.best_epoch);
            report.best_valid_auc = Some(o.best_valid_auc);
            report.test_auc = Some(o.test_auc);
        }
        Ok(Err(e)) => report.error = Some(e.to_string()),
        Err(p) => report.error = Some(format!("panic: {}", panic_message(p.as_ref()))),
    }
    report
}

fn select(method: Method, seed: u64, reports: Vec<RunReport>) -> Selection {
    let candidates = reports
        .iter()
        .map(|r| Candidate {
            lr: r.lr,
            fingerprint: r.fingerprint.clone(),
            best_valid_auc: r.best_valid_auc,
            error: r.error.clone(),
        })
        .collect();
    let mut best: Option<&RunReport> = None;
    for r in reports.iter().filter(|r| r.succeeded()) {
        if best.is_none_or(|b| r.best_valid_auc > b.best_valid_auc) {
            best = Some(r);
        }
    }
    let report = best.unwrap_or(&reports[0]).clone();
    Selection {
        schema_version: SCHEMA_VERSION,
        method,
        seed,
        report,
        candidates,
    }
}

fn write_results_csv(path: &Path, selections: &[Selection]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(format!("writing {}: {e}", path.display()));
    w.write_record([
        "method",
        "seed",
        "lr",
        "best_epoch",
        "best_valid_auc",
        "test_auc",
        "fingerprint",
        "error",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in selections {
        let r = &s.report;
        w.write_record([
            s.method.name().to_string(),
            s.seed.to_string(),
            r.lr.to_string(),
            r.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
            opt(r.best_valid_auc),
            opt(r.test_auc),
            r.fingerprint.clone(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(format!("writing {}: {e}", path.display())))?;
    write_atomic(path, &bytes)
}

/// Runs (or resumes) the grid described by `cfg` and writes all outputs.
pub fn run_grid(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<GridOutcome> {
    cfg.validate()?;
    let methods: Vec<Method> = match &opts.methods {
        Some(filter) => {
            let kept: Vec<Method> = cfg
                .methods
                .iter()
                .copied()
                .filter(|m| filter.contains(m))
                .collect();
            if kept.is_empty() {
                return Err(Error::Config(format!(
                    "method filter {:?} matches none of the configured methods",
                    filter.iter().map(|m| m.name()).collect::<Vec<_>>()
                )));
            }
            kept
        }
        None => cfg.methods.clone(),
    };
    let (splits, data_key) = prepare_data(cfg)?;
    let epochs = resolve_epochs(cfg.epochs, splits.train.len());

    let mut cells = Vec::new();
    for &method in &methods {
        for &base_seed in &cfg.seeds {
            let seed = base_seed
                .checked_add(opts.seed_offset)
                .ok_or_else(|| Error::Config("seed offset overflows".into()))?;
            for &lr in &cfg.lr_grid {
                let train = cfg.train_config(method, seed, lr, epochs);
                let fingerprint = fingerprint(&RunKey {
                    schema_version: SCHEMA_VERSION,
                    dataset: &data_key,
                    split: cfg.split,
                    split_seed: cfg.split_seed,
                    train: &train,
                })?;
                cells.push(Cell {
                    method,
                    seed,
                    lr,
                    train,
                    fingerprint,
                });
            }
        }
    }

    let out_dir = cfg.output_dir.clone();
    let runs = out_dir.join("runs");
    let selected_dir = out_dir.join("selected");
    for d in [&runs, &selected_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }

    // the same run can appear twice when the grid repeats a rate
    let mut seen = HashSet::new();
    let mut pending: Vec<&Cell> = cells
        .iter()
        .filter(|c| seen.insert(c.fingerprint.as_str()))
        .filter(|c| load_cached(&runs, &c.fingerprint).is_none())
        .collect();
    let cached = seen.len() - pending.len();
    let mut interrupted = false;
    if let Some(limit) = opts.max_new_runs {
        if pending.len() > limit {
            pending.truncate(limit);
            interrupted = true;
        }
    }

    let total = pending.len();
    let done = AtomicUsize::new(0);
    let run_one = |cell: &&Cell| -> Result<()> {
        let start = Instant::now();
        let report = execute(&splits, cell);
        let secs = start.elapsed().as_secs_f64();
        let path = report_path(&runs, &cell.fingerprint);
        write_atomic(
            &path.with_extension("time"),
            format!("{secs:.3}\n").as_bytes(),
        )?;
        write_atomic(&path, &to_json_bytes(&report)?)?;
        let k = done.fetch_add(1, Ordering::SeqCst) + 1;
        if !opts.quiet {
            let status = match (&report.error, report.test_auc) {
                (Some(e), _) => format!("FAILED: {e}"),
                (None, Some(t)) => format!("test AUC {t:.4}"),
                (None, None) => "no result".into(),
            };
            eprintln!(
                "[{k}/{total}] {} seed={} lr={} ({secs:.1}s) {status}",
                cell.method, cell.seed, cell.lr
            );
        }
        Ok(())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", opts.jobs)))?;
    pool.install(|| pending.par_iter().try_for_each(run_one))?;

    let mut outcome = GridOutcome {
        selections: Vec::new(),
        trained: total,
        cached,
        failed_runs: 0,
        interrupted,
        out_dir: out_dir.clone(),
    };
    if interrupted {
        return Ok(outcome);
    }

    let mut selections = Vec::new();
    for group in cells.chunk_by(|a, b| (a.method, a.seed) == (b.method, b.seed)) {
        let reports = group
            .iter()
            .map(|c| {
                load_cached(&runs, &c.fingerprint).ok_or_else(|| {
                    Error::Format(format!(
                        "report for run {} is missing or corrupt",
                        c.fingerprint
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        outcome.failed_runs += reports.iter().filter(|r| !r.succeeded()).count();
        let sel = select(group[0].method, group[0].seed, reports);
        write_atomic(&selected_dir.join(sel.file_name()), &to_json_bytes(&sel)?)?;
        selections.push(sel);
    }
    write_results_csv(&out_dir.join("results.csv"), &selections)?;
    outcome.selections = selections;
    Ok(outcome)
}
