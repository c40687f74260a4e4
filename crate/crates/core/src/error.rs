use thiserror::Error;

/// Errors produced by the estimation, simulation and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("invalid interference power {value} at position {index}")]
    InvalidPower { index: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate channel: zero-norm channel vector")]
    DegenerateChannel,

    #[error("no sample matches the conditioning value")]
    EmptyConditioning,

    #[error("marginal density {0:e} at conditioning value is too small")]
    LowEvidence(f64),

    #[error("zero variance in data, bandwidth undefined")]
    ZeroVariance,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
