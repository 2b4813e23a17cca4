use thiserror::Error;

use crate::message::ToolName;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },

    #[error("unexpected provider response: {0}")]
    BadResponse(String),

    #[error("malformed arguments for tool '{tool}': {reason} (raw: {raw})")]
    MalformedToolArguments {
        tool: String,
        reason: String,
        raw: String,
    },

    #[error("model called unknown tool '{0}'")]
    UnknownTool(String),

    #[error("forced tool '{expected}' was not called exactly once (got {got:?})")]
    ForcedToolViolation { expected: ToolName, got: Vec<String> },

    #[error("no cassette entry for request key {key}")]
    CacheMiss { key: String },

    #[error("cassette error: {0}")]
    Cassette(String),

    #[error("scripted provider: {0}")]
    Script(String),
}

impl GatewayError {
    /// Failures of the provider itself, as opposed to a well-delivered but
    /// unusable model output.
    pub fn is_provider_failure(&self) -> bool {
        matches!(
            self,
            Self::Transport { .. }
                | Self::Http { .. }
                | Self::BadResponse(_)
                | Self::CacheMiss { .. }
                | Self::Cassette(_)
                | Self::Script(_)
                | Self::InvalidRequest(_)
        )
    }
}
