use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("moment matching infeasible: max moment error {max_error:e} exceeds tolerance {tol:e}")]
    InfeasibleWithinTolerance { max_error: f64, tol: f64 },

    #[error("intervals of width {eta} around the given centers overlap")]
    OverlappingIntervals { eta: f64 },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("empty results")]
    EmptyResults,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Validation errors are caused by bad input rather than by the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::OverlappingIntervals { .. }
                | Error::Parse { .. }
        )
    }
}
