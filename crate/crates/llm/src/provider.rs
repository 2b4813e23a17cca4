use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::GatewayError;
use crate::message::{parse_arguments, ChatMessage, CompletionRequest, Role, ToolCall, ToolName};

/// A tool call exactly as the provider produced it, arguments unparsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawToolCall {
    pub id: String,
    pub name: String,
    pub arguments: String,
}

/// What a provider returns for one completion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<RawToolCall>,
}

impl ProviderResponse {
    pub fn text(content: impl Into<String>) -> Self {
        Self {
            content: Some(content.into()),
            tool_calls: Vec::new(),
        }
    }

    pub fn tool_call(id: impl Into<String>, name: impl Into<String>, arguments: impl Into<String>) -> Self {
        Self {
            content: None,
            tool_calls: vec![RawToolCall {
                id: id.into(),
                name: name.into(),
                arguments: arguments.into(),
            }],
        }
    }
}

/// A chat-completion backend.
pub trait Provider: Send + Sync {
    fn send(&self, request: &CompletionRequest) -> Result<ProviderResponse, GatewayError>;

    /// Short label recorded in evaluation manifests.
    fn label(&self) -> String;
}

/// Runs one completion and turns the provider output into an assistant
/// message, enforcing the request's tool contract.
pub fn complete(provider: &dyn Provider, request: &CompletionRequest) -> Result<ChatMessage, GatewayError> {
    request.validate()?;
    let response = provider.send(request)?;

    if let Some(expected) = request.forced_tool {
        let got: Vec<String> = response.tool_calls.iter().map(|c| c.name.clone()).collect();
        if got.len() != 1 || got[0] != expected.as_str() {
            return Err(GatewayError::ForcedToolViolation { expected, got });
        }
    }

    let mut calls = Vec::with_capacity(response.tool_calls.len());
    for (index, raw) in response.tool_calls.into_iter().enumerate() {
        let name: ToolName = raw.name.parse()?;
        if !request.offers(name) {
            return Err(GatewayError::UnknownTool(raw.name));
        }
        let arguments = parse_arguments(&raw.arguments).map_err(|reason| {
            GatewayError::MalformedToolArguments {
                tool: raw.name.clone(),
                reason,
                raw: raw.arguments.clone(),
            }
        })?;
        let id = if raw.id.trim().is_empty() {
            format!("call_{index}")
        } else {
            raw.id
        };
        calls.push(ToolCall { id, name, arguments });
    }

    Ok(ChatMessage {
        role: Role::Assistant,
        content: response.content.unwrap_or_default(),
        tool_calls: calls,
        tool_call_id: None,
    })
}

#[derive(Serialize)]
struct KeyView<'a> {
    model_id: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
    tools: &'a Option<Vec<crate::message::ToolSchema>>,
    forced_tool: &'a Option<ToolName>,
}

/// Stable content hash identifying a request in a cassette.
pub fn record_key(request: &CompletionRequest) -> String {
    let view = KeyView {
        model_id: &request.model_id,
        temperature: request.temperature,
        messages: &request.messages,
        tools: &request.tools,
        forced_tool: &request.forced_tool,
    };
    let canonical = serde_json::to_vec(&view).expect("request serializes");
    hex::encode(Sha256::digest(&canonical))
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn send(&self, request: &CompletionRequest) -> Result<ProviderResponse, GatewayError> {
        (**self).send(request)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}
