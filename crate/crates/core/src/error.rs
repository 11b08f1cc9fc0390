use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid loss specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("empty table: {0}")]
    EmptyTable(PathBuf),

    #[error("feature column {column} has zero sample standard deviation")]
    ConstantColumn { column: usize },

    #[error("solver diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("dense Hessian requested for p = {p} (limit {limit}); use the Hessian-vector product")]
    HessianTooLarge { p: usize, limit: usize },

    #[error("quadrature did not reach tolerance {requested:e} (estimated error {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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

    /// True for failures caused by input data rather than configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::EmptyTable(_)
                | Error::ConstantColumn { .. }
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
