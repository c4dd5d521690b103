//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix shapes do not match what the operation requires.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument is outside its valid range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical operation failed (rank deficiency, indefiniteness, NaN).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Synthetic data generation could not produce a valid instance.
    #[error("generation failure: {0}")]
    Generation(String),

    /// Benchmark/CLI configuration is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
