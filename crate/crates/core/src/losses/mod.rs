//! Training objectives: the AUC margin and AUC-mixup min-max losses, and the
//! cross-entropy / focal baselines.

mod auc;
mod classification;

pub(crate) use auc::labels_to_f64;
pub use auc::{
    auc_margin_grads, auc_margin_value, auc_mixup_grads, auc_mixup_value, optimal_aux,
    AucAuxiliaries, AucGrads, SoftBatch, SoftMoments, DEFAULT_MARGIN,
};
pub use classification::{ce_value_and_grads, focal_value_and_grads, FocalConfig, ScoreSpace};
