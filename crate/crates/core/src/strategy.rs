//! Motivational-interviewing strategy chain: pick one of eleven strategies,
//! then generate a response conditioned on it.

use std::fmt;
use std::str::FromStr;

use coach_llm::{complete, ChatMessage, Provider};
use serde::{Deserialize, Serialize};

use crate::assemble::{assemble_prompt, PromptContext, PromptStage};
use crate::dialogue::normalize_name;
use crate::error::Result;
use crate::prompts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InternalStrategy {
    AdviseWithPermission,
    Affirm,
    Facilitate,
    Filler,
    GivingInformation,
    Question,
    RaiseConcern,
    Reflect,
    Reframe,
    Support,
    Structure,
}

/// Used when the predicted name is not recognized.
pub const FALLBACK_STRATEGY: InternalStrategy = InternalStrategy::Question;

impl InternalStrategy {
    pub const ALL: [Self; 11] = [
        Self::AdviseWithPermission,
        Self::Affirm,
        Self::Facilitate,
        Self::Filler,
        Self::GivingInformation,
        Self::Question,
        Self::RaiseConcern,
        Self::Reflect,
        Self::Reframe,
        Self::Support,
        Self::Structure,
    ];

    /// Display name as it appears in the prompt catalog.
    pub fn name(self) -> &'static str {
        match self {
            Self::AdviseWithPermission => "Advise with Permission",
            Self::Affirm => "Affirm",
            Self::Facilitate => "Facilitate",
            Self::Filler => "Filler",
            Self::GivingInformation => "Giving Information",
            Self::Question => "Question",
            Self::RaiseConcern => "Raise Concern",
            Self::Reflect => "Reflect",
            Self::Reframe => "Reframe",
            Self::Support => "Support",
            Self::Structure => "Structure",
        }
    }

    /// The strategy's line from the catalog, e.g.
    /// `Affirm: Positive reinforcement, ...`.
    pub fn description(self) -> &'static str {
        let prefix = format!("{}: ", self.name());
        prompts::STRATEGY_DESCRIPTIONS
            .text()
            .split("\n\n")
            .find(|entry| entry.starts_with(&prefix))
            .expect("every strategy has a catalog entry")
    }

    /// `Advise with Permission, Affirm, ..., Structure`
    pub fn name_list() -> String {
        Self::ALL.map(Self::name).join(", ")
    }
}

impl fmt::Display for InternalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InternalStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_strategy(s).ok_or_else(|| format!("unknown strategy '{s}'"))
    }
}

/// Case-insensitive match on the strategy name, tolerating a leading
/// `Strategy:` label and surrounding punctuation.
pub fn parse_strategy(raw: &str) -> Option<InternalStrategy> {
    let mut text = raw.trim();
    if text.len() >= 9 && text[..9].eq_ignore_ascii_case("strategy:") {
        text = &text[9..];
    }
    let key = normalize_name(text);
    InternalStrategy::ALL
        .into_iter()
        .find(|s| normalize_name(s.name()) == key)
}

/// A generated response and the strategy that conditioned it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedResponse {
    pub strategy: InternalStrategy,
    pub message: ChatMessage,
}

pub fn predict_strategy(provider: &dyn Provider, ctx: &PromptContext<'_>) -> Result<InternalStrategy> {
    let request = assemble_prompt(&PromptStage::StrategyPredict, ctx);
    let reply = complete(provider, &request)?;
    Ok(parse_strategy(&reply.content).unwrap_or_else(|| {
        tracing::warn!(output = %reply.content, "unrecognized strategy; falling back to {FALLBACK_STRATEGY}");
        FALLBACK_STRATEGY
    }))
}

/// Generates the coach's reply. With `with_tools` the describe/visualize
/// schemas are attached and the reply may carry tool calls.
pub fn generate_response(
    provider: &dyn Provider,
    ctx: &PromptContext<'_>,
    strategy: InternalStrategy,
    with_tools: bool,
) -> Result<GroundedResponse> {
    let request = assemble_prompt(&PromptStage::ResponseGenerate { strategy, with_tools }, ctx);
    let message = complete(provider, &request)?;
    Ok(GroundedResponse { strategy, message })
}
