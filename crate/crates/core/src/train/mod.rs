//! Optimizers, gradient clipping and the epoch loop with early stopping.

mod clip;
mod fit;
mod optim;

pub use clip::{clip_gradients, global_norm};
pub use fit::{
    fit, fit_with_observer, repeated_fit, validation_mse, EarlyStopping, EpochRecord, RepeatedFit,
    SeedOutcome, TrainConfig, TrainReport,
};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState};
