use std::path::PathBuf;

use thiserror::Error;
use wavelab::WaveError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Wave {
        context: String,
        #[source]
        source: WaveError,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// 1 for usage and configuration problems, 2 for a failed check,
    /// 3 for numerical conditioning.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Wave { source, .. } => match source {
                WaveError::Conditioning { .. }
                | WaveError::Truncation { .. }
                | WaveError::Aliasing { .. }
                | WaveError::Resolution(_) => 3,
                WaveError::Invariant(_) => 2,
                _ => 1,
            },
        }
    }
}

pub trait Context<T> {
    fn context(self, what: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, WaveError> {
    fn context(self, what: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Wave {
            context: what.to_string(),
            source,
        })
    }
}
