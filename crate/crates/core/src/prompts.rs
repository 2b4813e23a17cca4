//! The shipped prompt catalog.
//!
//! Every prompt text lives in `prompts/` as a plain-text asset compiled into
//! the binary. `SHA256SUMS` pins each asset; [`verify_catalog`] recomputes the
//! digests so an edited prompt is caught at startup rather than silently
//! changing model behavior.

use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};

pub const STATE_SLOT: &str = "{DIALOGUE STATE PROMPT}";
pub const DATE_SLOT: &str = "{DATE_STRING}";
pub const STRATEGIES_SLOT: &str = "{STRATEGIES}";
pub const STRATEGY_SLOT: &str = "{STRATEGY_DESCRIPTION}";

pub struct PromptAsset {
    pub name: &'static str,
    pub raw: &'static str,
}

impl PromptAsset {
    /// The prompt text without the file's trailing newline.
    pub fn text(&self) -> &'static str {
        self.raw.strip_suffix('\n').unwrap_or(self.raw)
    }
}

macro_rules! asset {
    ($ident:ident, $file:literal) => {
        pub const $ident: PromptAsset = PromptAsset {
            name: $file,
            raw: include_str!(concat!("../prompts/", $file)),
        };
    };
}

asset!(STATE_CLASSIFICATION_SYSTEM, "state_classification_system.txt");
asset!(STATE_CLASSIFICATION_AGENT, "state_classification_agent.txt");
asset!(STATE_ONBOARDING, "states/1_onboarding.txt");
asset!(STATE_PROGRAM, "states/2_program.txt");
asset!(STATE_PAST_EXPERIENCE, "states/3_past_experience.txt");
asset!(STATE_BARRIERS, "states/4_barriers.txt");
asset!(STATE_MOTIVATION, "states/5_motivation.txt");
asset!(STATE_GOAL_SETTING, "states/6_goal_setting.txt");
asset!(STATE_ADVICE, "states/7_advice.txt");
asset!(STATE_GOODBYE, "states/8_goodbye.txt");
asset!(SYSTEM, "system.txt");
asset!(STRATEGY_PREDICTION_INSTRUCTIONS, "strategy_prediction_instructions.txt");
asset!(STRATEGY_DESCRIPTIONS, "strategy_descriptions.txt");
asset!(STRATEGY_PREDICTION_AGENT, "strategy_prediction_agent.txt");
asset!(RESPONSE_GENERATION_INSTRUCTIONS, "response_generation_instructions.txt");
asset!(TOOL_CALL_EXAMPLES, "tool_call_examples.txt");
asset!(RESPONSE_GENERATION_AGENT, "response_generation_agent.txt");
asset!(TOOL_NEED_INSTRUCTIONS, "tool_need_instructions.txt");
asset!(TOOL_NEED_AGENT, "tool_need_agent.txt");
asset!(TOOL_CALL_INSTRUCTIONS, "tool_call_instructions.txt");
asset!(TOOL_CALL_AGENT, "tool_call_agent.txt");

pub const ALL: [&PromptAsset; 21] = [
    &STATE_CLASSIFICATION_SYSTEM,
    &STATE_CLASSIFICATION_AGENT,
    &STATE_ONBOARDING,
    &STATE_PROGRAM,
    &STATE_PAST_EXPERIENCE,
    &STATE_BARRIERS,
    &STATE_MOTIVATION,
    &STATE_GOAL_SETTING,
    &STATE_ADVICE,
    &STATE_GOODBYE,
    &SYSTEM,
    &STRATEGY_PREDICTION_INSTRUCTIONS,
    &STRATEGY_DESCRIPTIONS,
    &STRATEGY_PREDICTION_AGENT,
    &RESPONSE_GENERATION_INSTRUCTIONS,
    &TOOL_CALL_EXAMPLES,
    &RESPONSE_GENERATION_AGENT,
    &TOOL_NEED_INSTRUCTIONS,
    &TOOL_NEED_AGENT,
    &TOOL_CALL_INSTRUCTIONS,
    &TOOL_CALL_AGENT,
];

pub const CHECKSUMS: &str = include_str!("../prompts/SHA256SUMS");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Checks every compiled-in asset against `SHA256SUMS`, and that the
/// manifest lists exactly the shipped assets.
pub fn verify_catalog() -> Result<()> {
    let mut listed = Vec::new();
    for line in CHECKSUMS.lines().filter(|l| !l.trim().is_empty()) {
        let (digest, name) = line
            .split_once("  ")
            .ok_or_else(|| CoreError::PromptCatalog(format!("bad checksum line '{line}'")))?;
        let asset = ALL
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| CoreError::PromptCatalog(format!("checksum for unknown asset '{name}'")))?;
        let actual = sha256_hex(asset.raw.as_bytes());
        if actual != digest {
            return Err(CoreError::PromptCatalog(format!(
                "{name}: expected sha256 {digest}, found {actual}"
            )));
        }
        listed.push(name);
    }
    if let Some(missing) = ALL.iter().find(|a| !listed.contains(&a.name)) {
        return Err(CoreError::PromptCatalog(format!("no checksum for '{}'", missing.name)));
    }
    Ok(())
}

/// Replaces a `{SLOT}` placeholder.
pub fn fill(template: &str, slot: &str, value: &str) -> String {
    template.replace(slot, value)
}
