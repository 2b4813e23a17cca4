//! Fixed inputs for the prompt-assembly goldens, shared with the acceptance
//! suite.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use coach_core::{assemble_prompt, tool_schemas, DialogueStateId, InternalStrategy, ModelSettings, PromptContext, PromptStage, Stage};
use coach_healthdata::SourceCatalog;
use coach_llm::{ChatMessage, CompletionRequest};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/prompts")
}

pub fn history() -> Vec<ChatMessage> {
    vec![
        ChatMessage::assistant("Hi, I'm your health coach. Could you tell me your name and age?"),
        ChatMessage::user("I'm Sam and I'm 34."),
        ChatMessage::assistant("Nice to meet you, Sam. What kind of goal would you like to work toward?"),
        ChatMessage::user("I'd like to walk more, but I'm not sure how much is realistic."),
    ]
}

pub fn candidate() -> ChatMessage {
    ChatMessage::assistant("Would it be alright if I suggested starting with three short walks a week?")
}

pub const STATE: DialogueStateId = DialogueStateId::GoalSetting;
pub const STRATEGY: InternalStrategy = InternalStrategy::AdviseWithPermission;

pub fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, 1).unwrap()
}

/// The request each stage assembles from the fixture.
pub fn build(stage: Stage) -> CompletionRequest {
    let history = history();
    let candidate = candidate();
    let model = ModelSettings::default();
    let tools = tool_schemas(&SourceCatalog::default());
    let ctx = PromptContext {
        history: &history,
        state: STATE,
        today: today(),
        model: &model,
        tools: &tools,
    };
    let stage = match stage {
        Stage::StateClassify => PromptStage::StateClassify,
        Stage::StrategyPredict => PromptStage::StrategyPredict,
        Stage::ResponseGenerate => PromptStage::ResponseGenerate {
            strategy: STRATEGY,
            with_tools: true,
        },
        Stage::ToolNeedPredict => PromptStage::ToolNeedPredict {
            strategy: STRATEGY,
            candidate: &candidate,
        },
        Stage::ToolCallGenerate => PromptStage::ToolCallGenerate {
            strategy: STRATEGY,
            candidate: &candidate,
        },
    };
    assemble_prompt(&stage, &ctx)
}

pub fn render(request: &CompletionRequest) -> String {
    serde_json::to_string_pretty(request).unwrap() + "\n"
}

pub fn golden_path(stage: Stage) -> PathBuf {
    golden_dir().join(format!("{}.json", stage.as_str()))
}
