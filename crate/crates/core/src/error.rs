use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid scene: {0}")]
    Validation(String),

    #[error("scene generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },

    #[error("malformed image: {0}")]
    Image(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("backward called before a caching forward pass")]
    MissingForwardCache,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: total loss {value}")]
    Divergence {
        epoch: usize,
        batch: usize,
        value: f64,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numerics rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}
