use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config ({} violation(s)):\n  - {}", .0.len(), .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("thread pool: {0}")]
    Pool(String),

    #[error(transparent)]
    Core(#[from] eel_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
