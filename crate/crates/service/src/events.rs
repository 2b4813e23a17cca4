//! The client-facing event stream of a session.
//!
//! Events are derived from the stored session rather than logged separately,
//! so a client that reconnects with the last sequence number it saw gets
//! exactly the events it missed, including after a server restart. Every turn
//! yields an optional `state_change`, its messages and visualizations in the
//! order the orchestrator produced them, and a closing `done`.

use coach_core::{DialogueStateId, InternalStrategy, Session};
use coach_llm::Role;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    StateChange {
        from: DialogueStateId,
        to: DialogueStateId,
    },
    Message {
        content: String,
        strategy: Option<InternalStrategy>,
    },
    Visualization {
        event_id: String,
        source: String,
        granularity: String,
    },
    Error {
        message: String,
    },
    Done,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::StateChange { .. } => "state_change",
            Self::Message { .. } => "message",
            Self::Visualization { .. } => "visualization",
            Self::Error { .. } => "error",
            Self::Done => "done",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEvent {
    /// Position in the session stream, starting at 1.
    pub sequence: u64,
    pub turn_index: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// All events of a session, in stream order.
pub fn session_events(session: &Session) -> Vec<ApiEvent> {
    let mut kinds: Vec<(usize, EventKind)> = Vec::new();
    let mut strategies = session.reply_strategies().into_iter();
    let mut turn: Option<(usize, DialogueStateId)> = None;

    for entry in &session.history {
        let message = &entry.message;
        if message.role == Role::User {
            if let Some((index, _)) = turn.take() {
                kinds.push((index, EventKind::Done));
            }
            // The user message is stored under the state the turn started in.
            turn = Some((entry.turn_index, entry.state));
            continue;
        }
        let Some((index, from)) = turn.as_mut() else {
            // Coach messages before the first user turn (seeded openings).
            if entry.is_visible_reply() {
                strategies.next();
            }
            continue;
        };
        if *from != entry.state {
            kinds.push((*index, EventKind::StateChange { from: *from, to: entry.state }));
            *from = entry.state;
        }
        match message.role {
            Role::Assistant if !message.has_tool_calls() => kinds.push((
                *index,
                EventKind::Message {
                    content: message.content.clone(),
                    strategy: strategies.next().flatten(),
                },
            )),
            Role::Tool => {
                let call_id = message.tool_call_id.as_deref().unwrap_or("");
                for event in session.events.iter().filter(|e| e.tool_call_id == call_id) {
                    kinds.push((
                        *index,
                        EventKind::Visualization {
                            event_id: event.id.clone(),
                            source: event.chart.source.to_string(),
                            granularity: event.chart.granularity.as_str().to_string(),
                        },
                    ));
                }
            }
            _ => {}
        }
    }
    if let Some((index, _)) = turn {
        kinds.push((index, EventKind::Done));
    }

    kinds
        .into_iter()
        .enumerate()
        .map(|(i, (turn_index, kind))| ApiEvent {
            sequence: i as u64 + 1,
            turn_index,
            kind,
        })
        .collect()
}

/// Events with a sequence number greater than `after`.
pub fn events_after(session: &Session, after: u64) -> Vec<ApiEvent> {
    session_events(session)
        .into_iter()
        .filter(|e| e.sequence > after)
        .collect()
}
