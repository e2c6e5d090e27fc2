//! Training procedures for the AUC objectives and the per-sample baselines.

mod adam;
mod pdsca;
mod pesg;
mod schedule;
mod state;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState, PerSampleLoss};
pub use pdsca::{pdsca_step, InnerBatch, PdscaConfig};
pub use pesg::{pesg_step, PesgConfig};
pub use schedule::{breakpoints, is_breakpoint, lr_factor};
pub use state::{FreeScores, TrainState};
pub use train::{
    evaluate, train, train_with_observer, Method, StepEvent, TrainConfig, TrainOutcome,
};
