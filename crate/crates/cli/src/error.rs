use std::path::PathBuf;

use thiserror::Error;

use gwsfs::estimate::EstimateError;
use gwsfs::limits::LimitError;
use gwsfs::model::ModelError;
use gwsfs::sfs::SfsError;
use gwsfs::sim::SimError;

/// Exit status for a successful command.
pub const EXIT_OK: u8 = 0;
/// Exit status for a failed validation or a failed computation.
pub const EXIT_FAILURE: u8 = 1;
/// Exit status for malformed arguments or configuration.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sfs(#[from] SfsError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error("{path}: line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::InvalidConfig(_) | CliError::Model(ModelError::Config(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
