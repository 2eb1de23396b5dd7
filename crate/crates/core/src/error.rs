use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Every variant maps onto one of the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unexpected end of data")]
    UnexpectedEof,

    /// Malformed file content (headers, magic bytes, out-of-domain values).
    #[error("malformed input: {0}")]
    Format(String),

    /// A precondition on the arguments of an operation does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("annulus not found: {0}")]
    AnnulusNotFound(String),

    /// Input is well-formed but violates a cross-file or domain rule
    /// (split leakage, label set inconsistent with the view).
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 3,
            Error::Invariant(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
