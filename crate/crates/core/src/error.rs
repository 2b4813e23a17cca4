use std::path::PathBuf;

use coach_llm::GatewayError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Provider(#[from] GatewayError),

    #[error("prompt catalog check failed: {0}")]
    PromptCatalog(String),

    #[error("session '{0}' not found")]
    SessionNotFound(String),

    #[error("invalid session id '{0}'")]
    InvalidSessionId(String),

    #[error("session file {path} is corrupt: {reason}")]
    CorruptSession { path: PathBuf, reason: String },

    #[error("session storage error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
