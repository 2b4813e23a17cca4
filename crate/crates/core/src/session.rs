//! Sessions and their on-disk store.
//!
//! A session file is a one-line header carrying the SHA-256 of the JSON body
//! that follows it. Saves go to a temporary file that is renamed over the old
//! one, so a crash never leaves a half-written session behind.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use coach_llm::{ChatMessage, Role};
use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueStateId;
use crate::error::{CoreError, Result};
use crate::prompts::sha256_hex;
use crate::strategy::InternalStrategy;
use crate::tools::VisualizationEvent;

/// One history message and the dialogue state it was produced in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub state: DialogueStateId,
    pub turn_index: usize,
    #[serde(flatten)]
    pub message: ChatMessage,
}

impl HistoryEntry {
    /// Assistant text the user actually sees (tool-call carriers are hidden).
    pub fn is_visible_reply(&self) -> bool {
        self.message.role == Role::Assistant && !self.message.has_tool_calls()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyLogEntry {
    pub turn_index: usize,
    pub state: DialogueStateId,
    pub strategy: InternalStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub state: DialogueStateId,
    pub history: Vec<HistoryEntry>,
    /// One entry per visible assistant message.
    pub strategy_log: Vec<StrategyLogEntry>,
    pub events: Vec<VisualizationEvent>,
    /// Free-text notes about the client; never filled automatically.
    #[serde(default)]
    pub user_profile: String,
    /// Sources the client agreed to share; `None` shares the whole catalog.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_sources: Option<BTreeSet<String>>,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Self::with_created_at(id, Utc::now())
    }

    pub fn with_created_at(id: impl Into<String>, created_at: DateTime<Utc>) -> Self {
        Self {
            id: id.into(),
            created_at,
            state: DialogueStateId::Onboarding,
            history: Vec::new(),
            strategy_log: Vec::new(),
            events: Vec::new(),
            user_profile: String::new(),
            shared_sources: None,
        }
    }

    /// A session with a random id.
    pub fn fresh() -> Self {
        Self::new(uuid::Uuid::new_v4().to_string())
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        self.history.iter().map(|e| e.message.clone()).collect()
    }

    pub fn user_turns(&self) -> usize {
        self.history.iter().filter(|e| e.message.role == Role::User).count()
    }

    pub fn visible_replies(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.history.iter().filter(|e| e.is_visible_reply())
    }

    /// The strategy behind each visible reply, in order. Replies that predate
    /// the strategy log (seeded openings) have none.
    pub fn reply_strategies(&self) -> Vec<Option<InternalStrategy>> {
        let replies = self.visible_replies().count();
        let unlogged = replies.saturating_sub(self.strategy_log.len());
        (0..replies)
            .map(|i| i.checked_sub(unlogged).map(|k| self.strategy_log[k].strategy))
            .collect()
    }

    pub fn event(&self, id: &str) -> Option<&VisualizationEvent> {
        self.events.iter().find(|e| e.id == id)
    }
}

const HEADER_PREFIX: &str = "coach-session v1 sha256=";

pub fn encode_session(session: &Session) -> String {
    let body = serde_json::to_string_pretty(session).expect("session serializes");
    format!("{HEADER_PREFIX}{}\n{body}\n", sha256_hex(body.as_bytes()))
}

pub fn decode_session(text: &str) -> std::result::Result<Session, String> {
    let (header, rest) = text.split_once('\n').ok_or("missing header")?;
    let digest = header.strip_prefix(HEADER_PREFIX).ok_or("unrecognized header")?;
    let body = rest.strip_suffix('\n').unwrap_or(rest);
    if sha256_hex(body.as_bytes()) != digest {
        return Err("checksum mismatch".into());
    }
    serde_json::from_str(body).map_err(|e| e.to_string())
}

/// Session ids double as file names, so only a safe alphabet is accepted.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf> {
        if !valid_session_id(id) {
            return Err(CoreError::InvalidSessionId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.session")))
    }

    pub fn save(&self, session: &Session) -> Result<()> {
        let path = self.path(&session.id)?;
        let tmp = self.dir.join(format!(".{}.{}.tmp", session.id, uuid::Uuid::new_v4()));
        let mut file = fs::File::create(&tmp)?;
        file.write_all(encode_session(session).as_bytes())?;
        file.sync_all()?;
        drop(file);
        fs::rename(&tmp, &path).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<Session> {
        let path = self.path(id)?;
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CoreError::SessionNotFound(id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        decode_session(&text).map_err(|reason| CoreError::CorruptSession { path, reason })
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).map(|p| p.exists()).unwrap_or(false)
    }

    /// Ids of all stored sessions, sorted.
    pub fn list(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".session")) {
                if valid_session_id(id) {
                    ids.push(id.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

fn push_block(out: &mut String, prefix: &str, text: &str) {
    let mut lines = text.lines();
    let _ = writeln!(out, "{prefix}: {}", lines.next().unwrap_or(""));
    for line in lines {
        let _ = writeln!(out, "  {line}");
    }
}

/// Plain-text transcript: a `[State]` marker whenever the state changes, then
/// role-prefixed lines. Continuation lines are indented by two spaces.
pub fn transcript(session: &Session) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "session: {}", session.id);
    let _ = writeln!(out, "state: {}", session.state);
    let mut current = None;
    let mut strategies = session.reply_strategies().into_iter();
    for entry in &session.history {
        if current != Some(entry.state) {
            let _ = writeln!(out, "\n[{}]", entry.state);
            current = Some(entry.state);
        }
        let message = &entry.message;
        match message.role {
            Role::System => push_block(&mut out, "system", &message.content),
            Role::User => push_block(&mut out, "user", &message.content),
            Role::Assistant if message.has_tool_calls() => {
                if !message.content.is_empty() {
                    push_block(&mut out, "coach (hidden)", &message.content);
                }
                for call in &message.tool_calls {
                    let _ = writeln!(out, "coach -> {}", call.signature());
                }
            }
            Role::Assistant => {
                let label = match strategies.next().flatten() {
                    Some(strategy) => format!("coach [{strategy}]"),
                    None => "coach".to_string(),
                };
                push_block(&mut out, &label, &message.content);
            }
            Role::Tool => {
                let id = message.tool_call_id.as_deref().unwrap_or("");
                push_block(&mut out, &format!("tool {id}"), &message.content);
                for event in session.events.iter().filter(|e| e.tool_call_id == id) {
                    let _ = writeln!(out, "[chart {}]", event.id);
                }
            }
        }
    }
    out
}
