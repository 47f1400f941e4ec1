//! Evaluation metrics and the studies built on top of trained models:
//! conductance-median pruning, detuned initial conditions and the model-size
//! grid search.

mod conductance;
mod grid;
mod init_study;
mod metrics;

pub use conductance::{conductance_medians, prune, ConductanceProfile, PruneOutcome};
pub use grid::{exponential_units, grid_candidates, grid_search, pareto_front, GridCandidate, GridPoint, GridSpec};
pub use init_study::{detuned_init_study, detuned_init_study_per_target, recovery_time, RecoveryRow, RecoveryTable, DEFAULT_BAND};
pub use metrics::{constant_predictor_mse, evaluate, initial_state, EvalReport, InitMode};
