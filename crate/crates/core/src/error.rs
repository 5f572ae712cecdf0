//! Error type shared by every module of the library.

use thiserror::Error;

/// Errors returned by aircomp operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is malformed or out of its admissible range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A reading or value lies outside the configured range.
    #[error("value {value} outside range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// Two sequences that must agree in length do not.
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// An empty collection where at least one element is required.
    #[error("empty input: {0}")]
    Empty(&'static str),

    /// The requested combination of function, scheme or kind is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A constraint such as constellation feasibility or a timing margin is violated.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// A numerical failure such as a singular matrix or a diverging solver.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Filesystem error while exporting results.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Serialization error.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
