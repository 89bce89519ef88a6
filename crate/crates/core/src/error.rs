use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field and grid do not match: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no ground-state bracket for b in [{lo:e}, {hi:e}]: {trace}")]
    NoGroundStateBracket { lo: f64, hi: f64, trace: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not enough samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
