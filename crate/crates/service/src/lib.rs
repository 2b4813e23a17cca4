//! Network API and command-line surface of the health coach.
//!
//! [`api`] serves sessions over HTTP with turns streamed as server-sent
//! events ([`events`]); [`cli`] implements the `coach` binary; [`config`]
//! resolves settings from flags, environment and a TOML file.

pub mod api;
pub mod cli;
pub mod config;
pub mod events;

pub use api::{router, ApiError, AppState};
pub use events::{events_after, session_events, ApiEvent, EventKind};
