//! Provider-agnostic chat completion with function calling.
//!
//! [`complete`] is the single entry point the coach uses: it validates the
//! request, asks a [`Provider`] for a completion and converts the raw output
//! into a [`ChatMessage`], rejecting calls to tools that were not offered and
//! enforcing forced-tool requests. Three providers ship with the crate:
//! [`LiveProvider`] (HTTP), [`ReplayProvider`] (cassette playback) and
//! [`ScriptedProvider`] (closures, for tests).

pub mod error;
pub mod live;
pub mod message;
pub mod provider;
pub mod replay;
pub mod scripted;

pub use error::GatewayError;
pub use live::{LiveConfig, LiveProvider};
pub use message::{ChatMessage, CompletionRequest, Role, ToolCall, ToolName, ToolSchema};
pub use provider::{complete, record_key, Provider, ProviderResponse, RawToolCall};
pub use replay::{Cassette, CassetteEntry, RecordingProvider, ReplayProvider};
pub use scripted::ScriptedProvider;

/// Default sampling temperature.
pub const DEFAULT_TEMPERATURE: f64 = 1.0;
/// Default model identifier for the live provider.
pub const DEFAULT_MODEL: &str = "gpt-4-0613";
