//! An offline stand-in for a chat model.
//!
//! It recognizes which chain stage a request belongs to and answers the way a
//! cooperative model would: every task is judged completed, strategies and
//! replies follow the current state, GoalSetting looks at step counts through
//! a describe call, and Advice triggers the forced visualize path. Used by the
//! `scripted` provider mode of the CLI and to record replay fixtures.

use coach_llm::{CompletionRequest, ProviderResponse, Role, ScriptedProvider};
use serde_json::json;

use crate::assemble::{detect_state, Stage};
use crate::dialogue::DialogueStateId;

fn strategy_for(state: DialogueStateId) -> &'static str {
    match state {
        DialogueStateId::Onboarding => "Question",
        DialogueStateId::Program => "Structure",
        DialogueStateId::PastExperience => "Question",
        DialogueStateId::Barriers => "Support",
        DialogueStateId::Motivation => "Reflect",
        DialogueStateId::GoalSetting => "Giving Information",
        DialogueStateId::Advice => "Advise with Permission",
        DialogueStateId::GoodBye => "Affirm",
    }
}

fn reply_for(state: DialogueStateId) -> &'static str {
    match state {
        DialogueStateId::Onboarding => {
            "Hi, I'm your health coach and I'm glad you're here. Could you tell me your name and age?"
        }
        DialogueStateId::Program => {
            "In this program you'll design your own physical activity plan, and I'll help you work out the \
             specifics. Does that make sense, and do you have any questions before we start?"
        }
        DialogueStateId::PastExperience => {
            "What kinds of physical activity have you done in the past, and for how long?"
        }
        DialogueStateId::Barriers => {
            "That sounds like a lot to juggle. What would you say is your biggest obstacle to being active right now?"
        }
        DialogueStateId::Motivation => {
            "It sounds like feeling more energetic matters a lot to you. What benefits are you hoping to get from regular exercise?"
        }
        DialogueStateId::GoalSetting => {
            "Let's set a short-term goal together. How many days a week would you like to be active?"
        }
        DialogueStateId::Advice => {
            "Would it be alright if I suggested a few ways to fit more walking into your day?"
        }
        DialogueStateId::GoodBye => {
            "Good luck! I'm confident you can reach your goal, and I'm always here if you want to chat."
        }
    }
}

const FOLLOW_UP: &str = "Your recent step counts give us a helpful baseline to plan from. \
                         How does that compare with what you expected?";

/// `YYYY-MM-DD` from the system prompt's date line.
fn prompt_date(request: &CompletionRequest) -> String {
    request
        .system_prompt()
        .split("Today's date is ")
        .nth(1)
        .map(|rest| rest.chars().take(10).collect())
        .unwrap_or_else(|| "2024-03-01".to_string())
}

/// Whether a tool already ran since the latest user message.
fn tool_ran_this_turn(request: &CompletionRequest) -> bool {
    request
        .messages
        .iter()
        .rev()
        .take_while(|m| m.role != Role::User)
        .any(|m| m.role == Role::Tool)
}

pub fn respond(request: &CompletionRequest) -> ProviderResponse {
    let state = detect_state(request).unwrap_or(DialogueStateId::Onboarding);
    match Stage::detect(request) {
        Some(Stage::StateClassify) => ProviderResponse::text("completed"),
        Some(Stage::StrategyPredict) => ProviderResponse::text(strategy_for(state)),
        Some(Stage::ResponseGenerate) => {
            if tool_ran_this_turn(request) {
                ProviderResponse::text(FOLLOW_UP)
            } else if state == DialogueStateId::GoalSetting && request.tools.is_some() {
                let date = prompt_date(request);
                let args = json!({
                    "data_source_name": "health.stepcount",
                    "start": format!("{date} 00:00:00"),
                    "end": format!("{date} 23:59:59"),
                    "granularity": "day",
                });
                ProviderResponse::tool_call("call_describe", "describe", args.to_string())
            } else {
                ProviderResponse::text(reply_for(state))
            }
        }
        Some(Stage::ToolNeedPredict) => {
            ProviderResponse::text(if state == DialogueStateId::Advice { "yes" } else { "no" })
        }
        Some(Stage::ToolCallGenerate) => {
            let args = json!({
                "data_source_name": "health.stepcount",
                "date": prompt_date(request),
                "granularity": "week",
            });
            ProviderResponse::tool_call("call_visualize", "visualize", args.to_string())
        }
        None => ProviderResponse::text("Thanks for sharing. Tell me more."),
    }
}

pub fn demo_provider() -> ScriptedProvider {
    ScriptedProvider::new(|request| Ok(respond(request)))
}

/// Client messages for an eight-turn demo conversation.
pub const DEMO_USER_MESSAGES: [&str; 8] = [
    "Hi there!",
    "I'm Sam and I'm 34.",
    "Sounds good, no questions.",
    "I used to run a couple of times a week in college, but I stopped after I started working.",
    "My knees are fine. Mostly I just don't have much time after work.",
    "I want to have more energy to play with my kids.",
    "Maybe three days a week, 30 minutes of brisk walking in the evening.",
    "Thanks, that helps a lot. Bye!",
];
