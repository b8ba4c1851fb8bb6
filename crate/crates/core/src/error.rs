use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-domain input (non-finite values, unsorted grids, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An integral or norm was detected to diverge by the tail test.
    #[error("divergent integral: {0}")]
    Divergence(String),
    /// A named precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A modelling hypothesis (kernel growth, moments, mixing rates) failed.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    /// A numerical routine failed (factorization, non-finite result).
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Configuration could not be read or is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// Filesystem problems while reading inputs or writing reports.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(invalid(format!("{what}: non-finite value at index {i}"))),
        None => Ok(()),
    }
}
