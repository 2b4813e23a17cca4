//! One user turn through the three chains.
//!
//! Order of work: append the user message, classify and maybe advance the
//! state, predict a strategy, generate a reply (running up to `max_tool_calls`
//! tool executions, regenerating after each round), and, if no tool ran,
//! ask whether the reply should be augmented with a forced visualize call
//! followed by one data-aware follow-up. A failed turn restores the session
//! to its pre-turn snapshot.

use std::sync::Arc;

use chrono::{NaiveDate, Utc};
use coach_healthdata::HealthStore;
use coach_llm::{ChatMessage, GatewayError, Provider, ToolSchema};
use serde::{Deserialize, Serialize};

use crate::assemble::{ModelSettings, PromptContext};
use crate::dialogue::{advance, classify_advance, DialogueStateId};
use crate::error::{CoreError, Result};
use crate::session::{HistoryEntry, Session, SessionStore, StrategyLogEntry};
use crate::strategy::{generate_response, predict_strategy, InternalStrategy};
use crate::tools::{
    execute_query, execute_tool, generate_forced_tool_call, predict_tool_need, tool_schemas, validate_call,
    ChartData, ToolNeedDecision, VisualizationEvent,
};

pub const DEFAULT_MAX_TOOL_CALLS: usize = 3;

/// Tool result for calls beyond the per-turn budget.
pub const TOOL_LIMIT_TEXT: &str = "error: tool-call limit reached for this turn";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoachConfig {
    pub model: ModelSettings,
    /// Upper bound on tool executions per turn.
    pub max_tool_calls: usize,
    /// Date shown to the model; the store zone's current date when unset.
    pub today: Option<NaiveDate>,
}

impl Default for CoachConfig {
    fn default() -> Self {
        Self {
            model: ModelSettings::default(),
            max_tool_calls: DEFAULT_MAX_TOOL_CALLS,
            today: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub from: DialogueStateId,
    pub to: DialogueStateId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputItem {
    Message { content: String, strategy: InternalStrategy },
    Visualization { event_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutput {
    pub turn_index: usize,
    pub state_change: Option<StateChange>,
    pub items: Vec<OutputItem>,
}

impl TurnOutput {
    pub fn messages(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|item| match item {
            OutputItem::Message { content, .. } => Some(content.as_str()),
            OutputItem::Visualization { .. } => None,
        })
    }
}

pub struct Orchestrator {
    provider: Arc<dyn Provider>,
    store: Arc<HealthStore>,
    config: CoachConfig,
    tools: Vec<ToolSchema>,
    sessions: Option<SessionStore>,
}

struct Turn<'s> {
    session: &'s mut Session,
    index: usize,
    today: NaiveDate,
    items: Vec<OutputItem>,
}

impl Turn<'_> {
    fn push(&mut self, message: ChatMessage) {
        self.session.history.push(HistoryEntry {
            state: self.session.state,
            turn_index: self.index,
            message,
        });
    }

    fn push_visible(&mut self, message: ChatMessage, strategy: InternalStrategy) {
        self.items.push(OutputItem::Message {
            content: message.content.clone(),
            strategy,
        });
        self.session.strategy_log.push(StrategyLogEntry {
            turn_index: self.index,
            state: self.session.state,
            strategy,
        });
        self.push(message);
    }

    fn push_event(&mut self, tool_call_id: &str, chart: ChartData) {
        let id = format!("viz-{}", self.session.events.len() + 1);
        self.items.push(OutputItem::Visualization { event_id: id.clone() });
        self.session.events.push(VisualizationEvent {
            id,
            tool_call_id: tool_call_id.to_string(),
            turn_index: self.index,
            chart,
        });
    }
}

impl Orchestrator {
    pub fn new(provider: Arc<dyn Provider>, store: Arc<HealthStore>, config: CoachConfig) -> Self {
        let tools = tool_schemas(store.catalog());
        Self {
            provider,
            store,
            config,
            tools,
            sessions: None,
        }
    }

    /// Persist every successful turn to `sessions`.
    pub fn with_session_store(mut self, sessions: SessionStore) -> Self {
        self.sessions = Some(sessions);
        self
    }

    pub fn config(&self) -> &CoachConfig {
        &self.config
    }

    pub fn store(&self) -> &Arc<HealthStore> {
        &self.store
    }

    pub fn provider(&self) -> &Arc<dyn Provider> {
        &self.provider
    }

    pub fn sessions(&self) -> Option<&SessionStore> {
        self.sessions.as_ref()
    }

    pub fn tools(&self) -> &[ToolSchema] {
        &self.tools
    }

    pub fn today(&self) -> NaiveDate {
        self.config
            .today
            .unwrap_or_else(|| Utc::now().with_timezone(&self.store.time_zone()).date_naive())
    }

    fn context<'a>(&'a self, history: &'a [ChatMessage], state: DialogueStateId, today: NaiveDate) -> PromptContext<'a> {
        PromptContext {
            history,
            state,
            today,
            model: &self.config.model,
            tools: &self.tools,
        }
    }

    /// Runs one turn. On any error the session is left exactly as it was.
    pub fn handle_user_message(&self, session: &mut Session, text: &str) -> Result<TurnOutput> {
        let snapshot = session.clone();
        let result = self.run_turn(session, text).and_then(|output| {
            if let Some(sessions) = &self.sessions {
                sessions.save(session)?;
            }
            Ok(output)
        });
        if result.is_err() {
            *session = snapshot;
        }
        result
    }

    fn run_turn(&self, session: &mut Session, text: &str) -> Result<TurnOutput> {
        let index = session.user_turns();
        let mut turn = Turn {
            session,
            index,
            today: self.today(),
            items: Vec::new(),
        };
        turn.push(ChatMessage::user(text));

        let before = turn.session.state;
        let history = turn.session.messages();
        let decision = classify_advance(self.provider.as_ref(), &self.context(&history, before, turn.today))?;
        let state = advance(before, decision);
        turn.session.state = state;
        let state_change = (state != before).then_some(StateChange { from: before, to: state });

        let strategy = predict_strategy(self.provider.as_ref(), &self.context(&history, state, turn.today))?;

        let limit = self.config.max_tool_calls;
        let mut executions = 0;
        let mut tool_used = false;
        let mut reply = self.generate(&turn, strategy, limit > 0)?;
        while reply.has_tool_calls() {
            tool_used = true;
            let calls = reply.tool_calls.clone();
            turn.push(reply);
            for call in &calls {
                let text = if executions < limit {
                    executions += 1;
                    let execution = execute_tool(&self.store, call, turn.session.shared_sources.as_ref());
                    if let Some(chart) = execution.chart {
                        turn.push_event(&call.id, chart);
                    }
                    execution.text
                } else {
                    TOOL_LIMIT_TEXT.to_string()
                };
                turn.push(ChatMessage::tool_result(&call.id, text));
            }
            reply = self.generate(&turn, strategy, executions < limit)?;
        }

        if !tool_used && limit > 0 {
            reply = self.augment(&mut turn, strategy, reply)?;
        }
        turn.push_visible(reply, strategy);

        Ok(TurnOutput {
            turn_index: index,
            state_change,
            items: turn.items,
        })
    }

    /// Generates a reply. A tool-enabled reply whose calls cannot be parsed
    /// is regenerated once without tools.
    fn generate(&self, turn: &Turn<'_>, strategy: InternalStrategy, with_tools: bool) -> Result<ChatMessage> {
        let history = turn.session.messages();
        let ctx = self.context(&history, turn.session.state, turn.today);
        match generate_response(self.provider.as_ref(), &ctx, strategy, with_tools) {
            Ok(grounded) => Ok(grounded.message),
            Err(CoreError::Provider(
                err @ (GatewayError::MalformedToolArguments { .. } | GatewayError::UnknownTool(_)),
            )) if with_tools => {
                tracing::warn!(error = %err, "unusable tool call in reply; regenerating without tools");
                Ok(generate_response(self.provider.as_ref(), &ctx, strategy, false)?.message)
            }
            Err(err) => Err(err),
        }
    }

    /// The tool-need chain. Returns the message that should close the turn:
    /// the candidate itself, or a follow-up written after a forced visualize
    /// call (the candidate is then emitted first).
    fn augment(&self, turn: &mut Turn<'_>, strategy: InternalStrategy, candidate: ChatMessage) -> Result<ChatMessage> {
        let history = turn.session.messages();
        let ctx = self.context(&history, turn.session.state, turn.today);
        if predict_tool_need(self.provider.as_ref(), &ctx, strategy, &candidate)? == ToolNeedDecision::No {
            return Ok(candidate);
        }
        let shared = turn.session.shared_sources.clone();
        let forced = generate_forced_tool_call(self.provider.as_ref(), &ctx, strategy, &candidate, |call| {
            validate_call(call, &self.store, shared.as_ref())
        });
        let forced = match forced {
            Ok(Some(forced)) => forced,
            Ok(None) => {
                tracing::warn!("forced tool call unusable after re-ask; sending reply without data");
                return Ok(candidate);
            }
            Err(CoreError::Provider(err)) if !err.is_provider_failure() => {
                tracing::warn!(error = %err, "forced tool call rejected; sending reply without data");
                return Ok(candidate);
            }
            Err(err) => return Err(err),
        };

        turn.push_visible(candidate, strategy);
        let call_id = forced.message.tool_calls[0].id.clone();
        turn.push(forced.message);
        let execution = execute_query(&self.store, &forced.query);
        if let Some(chart) = execution.chart {
            turn.push_event(&call_id, chart);
        }
        turn.push(ChatMessage::tool_result(call_id, execution.text));
        self.generate(turn, strategy, false)
    }
}
