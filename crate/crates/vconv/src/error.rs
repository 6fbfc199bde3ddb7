use thiserror::Error;

/// Errors produced by domain construction, evaluation, and report emission.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain")]
    PointOutsideDomain { point: Vec<f64> },

    #[error("semidistance member index {index} out of range (family has {len} members)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("evaluator `{name}` failed at {point:?}: {reason}")]
    Eval {
        name: String,
        point: Vec<f64>,
        reason: String,
    },

    #[error("sequence horizons disagree: {left} vs {right}")]
    HorizonMismatch { left: usize, right: usize },

    #[error("unknown corpus family `{name}`; available: {available}")]
    UnknownFamily { name: String, available: String },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("approximant generator failed: {0}")]
    Generator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
