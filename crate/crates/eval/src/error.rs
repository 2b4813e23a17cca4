use std::path::PathBuf;

use coach_core::CoreError;
use coach_llm::GatewayError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Provider(#[from] GatewayError),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("invalid seed history {id}: {reason}")]
    InvalidSeed { id: String, reason: String },

    #[error("{path}: {reason}")]
    Input { path: PathBuf, reason: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;
