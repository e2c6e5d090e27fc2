//! Data-side machinery: mixup, the positive-guaranteeing dual sampler,
//! imbalanced binarisation, synthetic data and dataset files.

mod beta;
mod dataset;
mod io;
mod mixup;
mod sampler;

pub use beta::{beta_variate, ln_gamma_variate};
pub use dataset::{
    binarize_imbalance, generate_synthetic, split_stratified, DataSplits, LabeledDataset,
    MulticlassDataset, SyntheticSpec,
};
pub use io::{read_binary, read_csv, read_table, write_binary, write_csv, LabeledTable};
pub use mixup::{mixup_batch, mixup_shuffled, mixup_with_lambdas, sample_lambda, MixupConfig};
pub use sampler::{dual_sample, DualSampler, SamplerConfig, DEFAULT_BATCH_SIZE};
