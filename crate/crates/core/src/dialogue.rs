//! The linear eight-state coaching program and the state-advance classifier.

use std::fmt;
use std::str::FromStr;

use coach_llm::{complete, ChatMessage, Provider};
use serde::{Deserialize, Serialize};

use crate::assemble::{assemble_prompt, PromptContext, PromptStage};
use crate::error::Result;
use crate::prompts::{self, PromptAsset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DialogueStateId {
    Onboarding,
    Program,
    PastExperience,
    Barriers,
    Motivation,
    GoalSetting,
    Advice,
    GoodBye,
}

impl DialogueStateId {
    pub const ALL: [Self; 8] = [
        Self::Onboarding,
        Self::Program,
        Self::PastExperience,
        Self::Barriers,
        Self::Motivation,
        Self::GoalSetting,
        Self::Advice,
        Self::GoodBye,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_terminal(self) -> bool {
        self == Self::GoodBye
    }

    /// The successor state; GoodBye is absorbing.
    pub fn next(self) -> Self {
        Self::ALL.get(self.index() + 1).copied().unwrap_or(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Onboarding => "Onboarding",
            Self::Program => "Program",
            Self::PastExperience => "PastExperience",
            Self::Barriers => "Barriers",
            Self::Motivation => "Motivation",
            Self::GoalSetting => "GoalSetting",
            Self::Advice => "Advice",
            Self::GoodBye => "GoodBye",
        }
    }

    fn asset(self) -> &'static PromptAsset {
        match self {
            Self::Onboarding => &prompts::STATE_ONBOARDING,
            Self::Program => &prompts::STATE_PROGRAM,
            Self::PastExperience => &prompts::STATE_PAST_EXPERIENCE,
            Self::Barriers => &prompts::STATE_BARRIERS,
            Self::Motivation => &prompts::STATE_MOTIVATION,
            Self::GoalSetting => &prompts::STATE_GOAL_SETTING,
            Self::Advice => &prompts::STATE_ADVICE,
            Self::GoodBye => &prompts::STATE_GOODBYE,
        }
    }

    pub fn prompt(self) -> StatePrompt {
        StatePrompt {
            state: self,
            task_text: self.asset().text(),
        }
    }
}

impl fmt::Display for DialogueStateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DialogueStateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize_name(s);
        Self::ALL
            .into_iter()
            .find(|state| normalize_name(state.as_str()) == key)
            .ok_or_else(|| format!("unknown dialogue state '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatePrompt {
    pub state: DialogueStateId,
    pub task_text: &'static str,
}

pub fn state_prompt(state: DialogueStateId) -> StatePrompt {
    state.prompt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdvanceDecision {
    Continue,
    Completed,
}

/// Lowercase alphanumerics only, used to compare names loosely.
pub(crate) fn normalize_name(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Trims whitespace and surrounding punctuation and lowercases a one-word
/// model verdict.
pub fn normalize_verdict(raw: &str) -> String {
    raw.trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

pub fn parse_advance(raw: &str) -> Option<AdvanceDecision> {
    match normalize_verdict(raw).as_str() {
        "completed" => Some(AdvanceDecision::Completed),
        "continue" => Some(AdvanceDecision::Continue),
        _ => None,
    }
}

/// Asks the classifier whether the current state's task is done. Output that
/// is neither verdict counts as Continue, so garbage never moves the state.
pub fn classify_advance(
    provider: &dyn Provider,
    ctx: &PromptContext<'_>,
) -> Result<AdvanceDecision> {
    let request = assemble_prompt(&PromptStage::StateClassify, ctx);
    let reply: ChatMessage = complete(provider, &request)?;
    Ok(parse_advance(&reply.content).unwrap_or_else(|| {
        tracing::warn!(verdict = %reply.content, state = %ctx.state, "unparseable state verdict; continuing");
        AdvanceDecision::Continue
    }))
}

pub fn advance(state: DialogueStateId, decision: AdvanceDecision) -> DialogueStateId {
    match decision {
        AdvanceDecision::Completed => state.next(),
        AdvanceDecision::Continue => state,
    }
}
