//! Annotated transcripts: the flattened, analysis-ready view of a session.

use std::fs;
use std::path::{Path, PathBuf};

use coach_core::session::decode_session;
use coach_core::{DialogueStateId, InternalStrategy, Session};
use coach_llm::Role;
use serde::{Deserialize, Serialize};

use crate::coding::{CodedUtterance, Coder};
use crate::error::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    User,
    /// A coach message shown to the user.
    Reply,
    /// A hidden coach message carrying tool calls.
    ToolCall,
    ToolResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub turn_index: usize,
    pub state: DialogueStateId,
    pub kind: EntryKind,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<InternalStrategy>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub tool_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coding: Option<CodedUtterance>,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl TranscriptEntry {
    pub fn new(turn_index: usize, state: DialogueStateId, kind: EntryKind, content: impl Into<String>) -> Self {
        Self {
            turn_index,
            state,
            kind,
            content: content.into(),
            strategy: None,
            tool_calls: 0,
            coding: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTranscript {
    pub id: String,
    pub entries: Vec<TranscriptEntry>,
}

impl AnnotatedTranscript {
    /// Flattens a session. Visible replies take their strategies from the
    /// session's strategy log.
    pub fn from_session(session: &Session) -> Self {
        let mut strategies = session.reply_strategies().into_iter();
        let entries = session
            .history
            .iter()
            .filter_map(|entry| {
                let message = &entry.message;
                let kind = match message.role {
                    Role::System => return None,
                    Role::User => EntryKind::User,
                    Role::Assistant if message.has_tool_calls() => EntryKind::ToolCall,
                    Role::Assistant => EntryKind::Reply,
                    Role::Tool => EntryKind::ToolResult,
                };
                let mut out = TranscriptEntry::new(entry.turn_index, entry.state, kind, message.content.clone());
                match kind {
                    EntryKind::Reply => out.strategy = strategies.next().flatten(),
                    EntryKind::ToolCall => out.tool_calls = message.tool_calls.len(),
                    _ => {}
                }
                Some(out)
            })
            .collect();
        Self {
            id: session.id.clone(),
            entries,
        }
    }

    pub fn replies(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.iter().filter(|e| e.kind == EntryKind::Reply)
    }

    /// Codes every uncoded reply. Returns how many replies could not be coded;
    /// those keep `coding: None`.
    pub fn code_replies(&mut self, coder: &Coder<'_>) -> usize {
        let mut failures = 0;
        for entry in self.entries.iter_mut().filter(|e| e.kind == EntryKind::Reply && e.coding.is_none()) {
            match coder.code_utterance(&entry.content) {
                Ok(coded) => entry.coding = Some(coded),
                Err(err) => {
                    tracing::warn!(transcript = %self.id, turn = entry.turn_index, error = %err, "reply left uncoded");
                    failures += 1;
                }
            }
        }
        failures
    }
}

/// File suffix for coded transcripts written by the coding command.
pub const TRANSCRIPT_SUFFIX: &str = ".transcript.json";

/// Reads a `.session` file or an annotated transcript JSON file.
pub fn load_transcript(path: &Path) -> Result<AnnotatedTranscript> {
    let text = fs::read_to_string(path)?;
    let bad = |reason: String| EvalError::Input {
        path: path.to_path_buf(),
        reason,
    };
    if path.extension().is_some_and(|e| e == "session") {
        decode_session(&text).map(|s| AnnotatedTranscript::from_session(&s)).map_err(bad)
    } else {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

/// Loads every transcript in `dir`, sorted by file name. When a session and
/// a coded transcript share an id, the coded transcript wins.
pub fn load_transcript_dir(dir: &Path) -> Result<Vec<AnnotatedTranscript>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        name.ends_with(".session") || name.ends_with(TRANSCRIPT_SUFFIX)
    });
    paths.sort();
    let mut out: Vec<AnnotatedTranscript> = Vec::new();
    for path in paths {
        let transcript = load_transcript(&path)?;
        let coded = path.to_string_lossy().ends_with(TRANSCRIPT_SUFFIX);
        match out.iter_mut().find(|t| t.id == transcript.id) {
            Some(existing) if coded => *existing = transcript,
            Some(_) => {}
            None => out.push(transcript),
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
