use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: no edges found")]
    EmptyInput,

    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// One entry per offending field.
    #[error("invalid specification: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("insufficient tail samples: {count} at or above x_min, need at least {required}")]
    InsufficientTail { count: usize, required: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("series diverges: c^alpha * b = {ratio} >= 1")]
    SeriesDiverges { ratio: f64 },

    #[error("snapshot for iteration {0} was not retained")]
    MissingSnapshot(usize),

    #[error(
        "no convergence after {generations} generations (last max CCDF change {last_change:.3e}, tolerance {tolerance:.1e})"
    )]
    NonConvergence {
        generations: usize,
        last_change: f64,
        tolerance: f64,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
