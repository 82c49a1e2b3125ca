use std::path::PathBuf;

use mcfuse_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// 1 usage, 2 data or I/O, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Core(CoreError::NotConverged(_)) => 3,
            AppError::Core(CoreError::InvalidConfig(_) | CoreError::InvalidThresholds) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
