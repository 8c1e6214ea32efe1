use std::path::PathBuf;

use qmerge_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 2 config error, 3 contract violation, 4 infeasible estimation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(CoreError::Contract(_) | CoreError::NotUnitary { .. } | CoreError::Singular(_)) => 3,
            Self::Core(CoreError::Infeasible { .. }) => 4,
            _ => 2,
        }
    }

    /// The message on one line.
    pub fn diagnostic(&self) -> String {
        self.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

pub(crate) fn config(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}
