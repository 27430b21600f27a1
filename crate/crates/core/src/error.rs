use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NumericFailure { residual: f64, iterations: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code for the CLI: 1 usage/contract, 2 I/O, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) | Error::Config(_) => 1,
            Error::Io { .. } | Error::Format { .. } => 2,
            Error::NumericFailure { .. } | Error::UndefinedMetric(_) => 3,
        }
    }
}
