use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] tgt_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::File {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 construction, 4 verification, 5 budget,
    /// 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(tgt_core::Error::Parameter(_)) => 2,
            CliError::Core(tgt_core::Error::Construction { .. }) => 3,
            CliError::Verification(_) => 4,
            CliError::Core(tgt_core::Error::Budget { .. }) => 5,
            _ => 1,
        }
    }
}
