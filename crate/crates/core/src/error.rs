use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed text file. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input is well-formed but the requested quantity does not exist
    /// for it (zero-norm row, empty class, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{0} is outside the domain of the formula")]
    Domain(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("{message} (residual {residual:e} after {iterations} iterations)")]
    Numeric {
        message: String,
        residual: f64,
        iterations: usize,
    },

    #[error("training diverged at step {step}: {message}")]
    Training { step: usize, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
