use std::path::PathBuf;

use thiserror::Error;

/// Failures of the experiment driver, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("cannot read {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        source: anilp_core::Error,
    },
    #[error("output failure at {path}: {detail}")]
    Output { path: PathBuf, detail: String },
}

impl CliError {
    pub fn numerical(context: impl Into<String>, source: anilp_core::Error) -> Self {
        CliError::Numerical {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) | CliError::ConfigRead { .. } => 2,
            CliError::Numerical { .. } | CliError::Output { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for anilp_core::Result<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::numerical(ctx(), e))
    }
}
