use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A channel or configuration entry is missing or malformed.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at data row {row}, column `{column}`: cannot read `{value}` as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("fold plan error: {0}")]
    Plan(String),

    /// A cached forward pass does not belong to the parameters it is used with.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in {context} at step {step}")]
    Numerical { context: String, step: usize },

    #[error("non-finite gradient in parameter block `{block}`")]
    NonFiniteGradient { block: String },

    #[error("rollout diverged at step {step}: |state| = {magnitude:e} exceeds bound {bound}")]
    Divergence {
        step: usize,
        magnitude: f64,
        bound: f64,
    },

    #[error("training failed: {0}")]
    TrainingFailure(String),

    #[error("no model satisfies the selection: {0}")]
    EmptySelection(String),

    #[error("plant simulation unstable at step {step}: {detail}")]
    Generation { step: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
