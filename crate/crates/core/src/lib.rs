//! Deep AUC maximization for small imbalanced datasets.
//!
//! The crate is organised bottom-up:
//!
//! - [`diffcore`]: dense tensors and a small MLP with reverse-mode gradients.
//! - [`losses`]: the AUC margin / AUC-mixup min-max objectives and CE/focal baselines.
//! - [`augment`]: mixup, the positive-guaranteeing dual sampler, dataset construction and IO.
//! - [`optim`]: PESG-style and PDSCA-style primal-dual steps, Adam, the step schedule and the training loop.
//! - [`metrics`]: exact AUC and run summaries.
//! - [`harness`]: config files, hyperparameter grids, persisted reports and comparison tables.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod diffcore;
pub mod error;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod optim;

pub use error::{Error, Result};

/// Library version stamped into every run report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
