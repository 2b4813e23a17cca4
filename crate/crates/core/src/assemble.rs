//! Prompt assembly for the five chain stages.
//!
//! Every request has the same shape: one system message built from catalog
//! blocks, then the dialogue history (plus the candidate reply for the tool
//! stages), then the stage's agent prompt sent as a trailing assistant
//! message.

use chrono::NaiveDate;
use coach_llm::{ChatMessage, CompletionRequest, ToolName, ToolSchema, DEFAULT_MODEL, DEFAULT_TEMPERATURE};
use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueStateId;
use crate::prompts::{self, fill, DATE_SLOT, STATE_SLOT, STRATEGIES_SLOT, STRATEGY_SLOT};
use crate::strategy::InternalStrategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model_id: String,
    pub temperature: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            model_id: DEFAULT_MODEL.to_string(),
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

/// `2024-03-01 Friday`
pub fn date_string(today: NaiveDate) -> String {
    today.format("%Y-%m-%d %A").to_string()
}

/// Everything a stage prompt is built from, besides stage-specific extras.
#[derive(Debug, Clone, Copy)]
pub struct PromptContext<'a> {
    pub history: &'a [ChatMessage],
    pub state: DialogueStateId,
    pub today: NaiveDate,
    pub model: &'a ModelSettings,
    pub tools: &'a [ToolSchema],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    StateClassify,
    StrategyPredict,
    ResponseGenerate,
    ToolNeedPredict,
    ToolCallGenerate,
}

impl Stage {
    pub const ALL: [Self; 5] = [
        Self::StateClassify,
        Self::StrategyPredict,
        Self::ResponseGenerate,
        Self::ToolNeedPredict,
        Self::ToolCallGenerate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::StateClassify => "state_classify",
            Self::StrategyPredict => "strategy_predict",
            Self::ResponseGenerate => "response_generate",
            Self::ToolNeedPredict => "tool_need_predict",
            Self::ToolCallGenerate => "tool_call_generate",
        }
    }

    fn marker(self) -> &'static str {
        match self {
            Self::StateClassify => prompts::STATE_CLASSIFICATION_SYSTEM.text().split(STATE_SLOT).next().unwrap_or(""),
            Self::StrategyPredict => prompts::STRATEGY_PREDICTION_INSTRUCTIONS.text(),
            Self::ResponseGenerate => prompts::RESPONSE_GENERATION_INSTRUCTIONS.text(),
            Self::ToolNeedPredict => prompts::TOOL_NEED_INSTRUCTIONS.text(),
            Self::ToolCallGenerate => prompts::TOOL_CALL_INSTRUCTIONS.text(),
        }
    }

    /// Identifies which stage produced a request from its system prompt.
    pub fn detect(request: &CompletionRequest) -> Option<Self> {
        let system = request.system_prompt();
        Self::ALL.into_iter().find(|stage| system.contains(stage.marker()))
    }
}

/// Which dialogue state's task a request was built for.
pub fn detect_state(request: &CompletionRequest) -> Option<DialogueStateId> {
    let system = request.system_prompt();
    DialogueStateId::ALL
        .into_iter()
        .find(|state| system.contains(state.prompt().task_text))
}

#[derive(Debug, Clone, Copy)]
pub enum PromptStage<'a> {
    StateClassify,
    StrategyPredict,
    ResponseGenerate {
        strategy: InternalStrategy,
        with_tools: bool,
    },
    ToolNeedPredict {
        strategy: InternalStrategy,
        candidate: &'a ChatMessage,
    },
    ToolCallGenerate {
        strategy: InternalStrategy,
        candidate: &'a ChatMessage,
    },
}

impl PromptStage<'_> {
    pub fn kind(&self) -> Stage {
        match self {
            Self::StateClassify => Stage::StateClassify,
            Self::StrategyPredict => Stage::StrategyPredict,
            Self::ResponseGenerate { .. } => Stage::ResponseGenerate,
            Self::ToolNeedPredict { .. } => Stage::ToolNeedPredict,
            Self::ToolCallGenerate { .. } => Stage::ToolCallGenerate,
        }
    }
}

fn coach_system(ctx: &PromptContext<'_>, blocks: &[&str]) -> String {
    let system = fill(prompts::SYSTEM.text(), DATE_SLOT, &date_string(ctx.today));
    let mut parts = vec![system.as_str(), ctx.state.prompt().task_text];
    parts.extend_from_slice(blocks);
    parts.join("\n\n")
}

fn agent_prompt(template: &str, ctx: &PromptContext<'_>, strategy: Option<InternalStrategy>) -> String {
    let text = fill(template, STATE_SLOT, ctx.state.prompt().task_text);
    match strategy {
        Some(s) => fill(&text, STRATEGY_SLOT, s.description()),
        None => text,
    }
}

/// Builds the request for one stage.
pub fn assemble_prompt(stage: &PromptStage<'_>, ctx: &PromptContext<'_>) -> CompletionRequest {
    let state_text = ctx.state.prompt().task_text;
    let strategies = prompts::STRATEGY_DESCRIPTIONS.text();
    let examples = prompts::TOOL_CALL_EXAMPLES.text();

    let (system, candidate, agent, tools, forced_tool) = match *stage {
        PromptStage::StateClassify => (
            fill(prompts::STATE_CLASSIFICATION_SYSTEM.text(), STATE_SLOT, state_text),
            None,
            agent_prompt(prompts::STATE_CLASSIFICATION_AGENT.text(), ctx, None),
            false,
            None,
        ),
        PromptStage::StrategyPredict => (
            coach_system(ctx, &[prompts::STRATEGY_PREDICTION_INSTRUCTIONS.text(), strategies]),
            None,
            fill(
                &agent_prompt(prompts::STRATEGY_PREDICTION_AGENT.text(), ctx, None),
                STRATEGIES_SLOT,
                &InternalStrategy::name_list(),
            ),
            false,
            None,
        ),
        PromptStage::ResponseGenerate { strategy, with_tools } => (
            coach_system(
                ctx,
                &[prompts::RESPONSE_GENERATION_INSTRUCTIONS.text(), strategies, examples],
            ),
            None,
            agent_prompt(prompts::RESPONSE_GENERATION_AGENT.text(), ctx, Some(strategy)),
            with_tools,
            None,
        ),
        PromptStage::ToolNeedPredict { strategy, candidate } => (
            coach_system(ctx, &[prompts::TOOL_NEED_INSTRUCTIONS.text(), examples]),
            Some(candidate),
            agent_prompt(prompts::TOOL_NEED_AGENT.text(), ctx, Some(strategy)),
            false,
            None,
        ),
        PromptStage::ToolCallGenerate { strategy, candidate } => (
            coach_system(ctx, &[prompts::TOOL_CALL_INSTRUCTIONS.text(), examples]),
            Some(candidate),
            agent_prompt(prompts::TOOL_CALL_AGENT.text(), ctx, Some(strategy)),
            true,
            Some(ToolName::Visualize),
        ),
    };

    let mut messages = Vec::with_capacity(ctx.history.len() + 3);
    messages.push(ChatMessage::system(system));
    messages.extend(ctx.history.iter().cloned());
    if let Some(candidate) = candidate {
        messages.push(candidate.clone());
    }
    messages.push(ChatMessage::assistant(agent));

    CompletionRequest {
        model_id: ctx.model.model_id.clone(),
        temperature: ctx.model.temperature,
        messages,
        tools: tools.then(|| ctx.tools.to_vec()),
        forced_tool,
    }
}
