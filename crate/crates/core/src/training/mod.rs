//! Maximum-likelihood flow training with optional manifold total correlation
//! or reconstruction regularizers.

mod losses;
mod optim;
mod train;

pub use losses::{
    batch_gradient, batch_objective, mtc_regularizer, mtc_term, nll_loss, reconstruction_loss,
    reconstruction_term, sample_terms, BatchGradient, Objective, RegularizerValue, SampleTerms,
};
pub use optim::{adam_step, clip_global_norm, global_norm, AdamConfig, AdamState};
pub use train::{
    fit_standardization, train, train_on, EpochRecord, FlowSpec, LossConfig, LossMode, TrainConfig,
    TrainHistory, TrainOutcome, TrainStatus,
};
