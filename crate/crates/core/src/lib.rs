//! The coaching dialogue engine.
//!
//! A user turn runs through three prompt chains: a classifier that moves the
//! conversation through eight coaching states ([`dialogue`]), a strategy chain
//! that grounds each reply in a motivational-interviewing strategy
//! ([`strategy`]), and a tool chain that lets the model query and chart the
//! user's health data ([`tools`]). [`Orchestrator`] runs the chains in order
//! and persists sessions through [`SessionStore`].

pub mod assemble;
pub mod demo;
pub mod dialogue;
pub mod error;
pub mod orchestrator;
pub mod prompts;
pub mod session;
pub mod strategy;
pub mod tools;

pub use assemble::{assemble_prompt, date_string, detect_state, ModelSettings, PromptContext, PromptStage, Stage};
pub use dialogue::{advance, classify_advance, state_prompt, AdvanceDecision, DialogueStateId, StatePrompt};
pub use error::{CoreError, Result};
pub use orchestrator::{CoachConfig, Orchestrator, OutputItem, StateChange, TurnOutput};
pub use session::{transcript, HistoryEntry, Session, SessionStore, StrategyLogEntry};
pub use strategy::{generate_response, predict_strategy, GroundedResponse, InternalStrategy};
pub use tools::{
    execute_tool, generate_forced_tool_call, predict_tool_need, tool_schemas, validate_call, ChartData,
    ChartPayload, ToolArgumentError, ToolExecution, ToolNeedDecision, ToolQuery, VisualizationEvent,
};
