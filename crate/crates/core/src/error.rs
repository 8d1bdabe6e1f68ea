use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("empty cloud")]
    EmptyCloud,
    #[error("degenerate cloud: {0}")]
    DegenerateCloud(String),
    #[error("no plane found")]
    NoPlaneFound,
    #[error("l not enclosing: projected coordinate {value} exceeds half-side {half_side}")]
    NotEnclosing { value: f64, half_side: f64 },
    #[error("degenerate category '{0}': intra-category distance is zero")]
    DegenerateCategory(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
