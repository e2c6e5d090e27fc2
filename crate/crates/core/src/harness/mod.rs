//! Experiment orchestration: config files, hyperparameter grids over
//! methods × seeds × learning rates, persisted reports and comparison tables.

mod check;
mod config;
mod grid;
mod report;
mod table;

pub use check::{run_checks, CheckResult};
pub use config::{
    load_config, parse_config, resolve_epochs, Binarize, DatasetSource, ExperimentConfig,
    DEFAULT_EPOCHS, KEYS, TINY_TRAIN_SIZE,
};
pub use grid::{prepare_data, run_grid, DatasetKey, GridOutcome, RunOptions};
pub use report::{
    fingerprint, load_selections, read_json, to_json_bytes, write_atomic, Candidate, RunReport,
    Selection, SCHEMA_VERSION,
};
pub use table::{compare_table, curves_csv, CompareTable, TableRow};
