use std::path::{Path, PathBuf};

use molcreativity::generation::{GenerationError, TaskError};
use molcreativity::icl::IclError;
use molcreativity::oracle::OracleError;
use molcreativity::refset::RefsetError;
use molcreativity::stats::StatsError;
use thiserror::Error;

/// Process exit categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config = 2,
    Backend = 3,
    Adapter = 4,
    Data = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("adapter: {0}")]
    Adapter(#[from] OracleError),
    #[error("data: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn kind(&self) -> ExitKind {
        match self {
            CliError::Config(_) => ExitKind::Config,
            CliError::Backend(_) => ExitKind::Backend,
            CliError::Adapter(_) => ExitKind::Adapter,
            CliError::Data(_) | CliError::Io { .. } => ExitKind::Data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind() as i32
    }

    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::BackendAuth(_) | GenerationError::BackendExhausted { .. } => {
                CliError::Backend(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<RefsetError> for CliError {
    fn from(e: RefsetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IclError> for CliError {
    fn from(e: IclError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}
