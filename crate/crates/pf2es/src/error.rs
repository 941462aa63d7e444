use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hyperparameter fit failed for output {output}: {reason}")]
    Fit { output: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported number of objectives: {0} (supported: 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown benchmark problem: {0}")]
    UnknownProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
