use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::System => "system",
            Self::User => "user",
            Self::Assistant => "assistant",
            Self::Tool => "tool",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The tools the coach exposes to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolName {
    Describe,
    Visualize,
}

impl ToolName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Describe => "describe",
            Self::Visualize => "visualize",
        }
    }
}

impl fmt::Display for ToolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolName {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "describe" => Ok(Self::Describe),
            "visualize" => Ok(Self::Visualize),
            other => Err(GatewayError::UnknownTool(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: ToolName,
    pub arguments: BTreeMap<String, String>,
}

impl ToolCall {
    pub fn argument(&self, key: &str) -> Option<&str> {
        self.arguments.get(key).map(String::as_str)
    }

    /// `visualize(data_source_name="health.stepcount", date="2024-03-01", granularity="month")`
    pub fn signature(&self) -> String {
        let args: Vec<String> = self
            .arguments
            .iter()
            .map(|(k, v)| format!("{k}={v:?}"))
            .collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

/// Parses tool-call arguments as a flat map. Scalars are kept as their text;
/// nested objects and arrays make the arguments malformed.
pub fn parse_arguments(raw: &str) -> Result<BTreeMap<String, String>, String> {
    let text = if raw.trim().is_empty() { "{}" } else { raw };
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let Value::Object(map) = value else {
        return Err("arguments are not a JSON object".to_string());
    };
    map.into_iter()
        .map(|(key, value)| match value {
            Value::String(s) => Ok((key, s)),
            Value::Number(n) => Ok((key, n.to_string())),
            Value::Bool(b) => Ok((key, b.to_string())),
            Value::Null => Err(format!("argument '{key}' is null")),
            Value::Array(_) | Value::Object(_) => Err(format!("argument '{key}' is not a scalar")),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl ChatMessage {
    fn plain(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::plain(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::plain(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::plain(Role::Assistant, content)
    }

    pub fn assistant_tool_calls(content: impl Into<String>, calls: Vec<ToolCall>) -> Self {
        Self {
            tool_calls: calls,
            ..Self::plain(Role::Assistant, content)
        }
    }

    pub fn tool_result(call_id: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            tool_call_id: Some(call_id.into()),
            ..Self::plain(Role::Tool, content)
        }
    }

    pub fn has_tool_calls(&self) -> bool {
        !self.tool_calls.is_empty()
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.role == Role::Tool && self.tool_call_id.is_none() {
            return Err(GatewayError::InvalidRequest(
                "tool message without tool_call_id".into(),
            ));
        }
        if self.role != Role::Assistant && !self.tool_calls.is_empty() {
            return Err(GatewayError::InvalidRequest(format!(
                "tool calls on a {} message",
                self.role
            )));
        }
        Ok(())
    }
}

/// JSON-schema description of one tool, as published to the provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: ToolName,
    pub description: String,
    pub parameters: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools: Option<Vec<ToolSchema>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_tool: Option<ToolName>,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let first = self
            .messages
            .first()
            .ok_or_else(|| GatewayError::InvalidRequest("no messages".into()))?;
        if first.role != Role::System {
            return Err(GatewayError::InvalidRequest(
                "first message must be a system message".into(),
            ));
        }
        for message in &self.messages {
            message.validate()?;
        }
        if !self.temperature.is_finite() {
            return Err(GatewayError::InvalidRequest("temperature is not finite".into()));
        }
        if let Some(forced) = self.forced_tool {
            let offered = self
                .tools
                .iter()
                .flatten()
                .any(|schema| schema.name == forced);
            if !offered {
                return Err(GatewayError::InvalidRequest(format!(
                    "forced tool '{forced}' is not among the request's tools"
                )));
            }
        }
        Ok(())
    }

    pub fn offers(&self, tool: ToolName) -> bool {
        self.tools.iter().flatten().any(|schema| schema.name == tool)
    }

    pub fn system_prompt(&self) -> &str {
        self.messages
            .first()
            .filter(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}
