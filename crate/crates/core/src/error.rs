//! Error types shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed data handed to an operation (shape mismatch, too few samples,
    /// out-of-range label, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Input that is technically well-formed but carries no usable signal,
    /// e.g. a sample set whose pairwise distances are all zero.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The kernel-weight program has an empty feasible set (no positive
    /// per-kernel statistic to normalize against).
    #[error("infeasible weight selection: {0}")]
    Infeasible(String),

    /// An optimizer failed to reach its convergence tolerance or hit a
    /// numerically singular system.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A non-finite value showed up where a finite one is required.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A checkpoint file that is unreadable as such (bad magic, truncation,
    /// unknown version, inconsistent shapes).
    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI contract: 2 usage, 3 numeric, 4 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Param(_) => 2,
            Error::Io { .. } | Error::Parse { .. } => 4,
            _ => 3,
        }
    }
}
