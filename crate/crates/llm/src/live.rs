//! HTTP provider for OpenAI-compatible chat-completion endpoints.

use std::fmt;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use crate::error::GatewayError;
use crate::message::{ChatMessage, CompletionRequest, Role};
use crate::provider::{Provider, ProviderResponse, RawToolCall};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Clone)]
pub struct LiveConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl LiveConfig {
    /// Reads the API key from `key_env`.
    pub fn from_env(endpoint: impl Into<String>, key_env: &str) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: std::env::var(key_env).ok().filter(|k| !k.is_empty()),
            ..Self::default()
        }
    }
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_key: None,
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

impl fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveConfig")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .field("max_attempts", &self.max_attempts)
            .finish()
    }
}

#[derive(Debug)]
pub struct LiveProvider {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { config, client })
    }

    fn post_once(&self, body: &Value) -> Result<Value, Attempt> {
        let mut builder = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| Attempt::Transient(e.to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Attempt::Transient(format!("HTTP {status}: {text}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(GatewayError::Http {
                status: status.as_u16(),
                body: text,
            }));
        }
        serde_json::from_str(&text).map_err(|e| Attempt::Fatal(GatewayError::BadResponse(e.to_string())))
    }
}

enum Attempt {
    Transient(String),
    Fatal(GatewayError),
}

fn wire_message(message: &ChatMessage) -> Value {
    let mut out = json!({
        "role": message.role.as_str(),
        "content": message.content,
    });
    if !message.tool_calls.is_empty() {
        out["tool_calls"] = message
            .tool_calls
            .iter()
            .map(|call| {
                json!({
                    "id": call.id,
                    "type": "function",
                    "function": {
                        "name": call.name.as_str(),
                        "arguments": serde_json::to_string(&call.arguments).expect("arguments serialize"),
                    }
                })
            })
            .collect();
        if message.content.is_empty() {
            out["content"] = Value::Null;
        }
    }
    if message.role == Role::Tool {
        out["tool_call_id"] = json!(message.tool_call_id);
    }
    out
}

/// Request body in the OpenAI chat-completions wire format.
pub fn wire_body(request: &CompletionRequest) -> Value {
    let mut body = json!({
        "model": request.model_id,
        "temperature": request.temperature,
        "messages": request.messages.iter().map(wire_message).collect::<Vec<_>>(),
    });
    if let Some(tools) = &request.tools {
        body["tools"] = tools
            .iter()
            .map(|schema| {
                json!({
                    "type": "function",
                    "function": {
                        "name": schema.name.as_str(),
                        "description": schema.description,
                        "parameters": schema.parameters,
                    }
                })
            })
            .collect();
    }
    if let Some(forced) = request.forced_tool {
        body["tool_choice"] = json!({"type": "function", "function": {"name": forced.as_str()}});
    }
    body
}

/// Extracts the first choice of a chat-completions response.
pub fn parse_wire_response(body: &Value) -> Result<ProviderResponse, GatewayError> {
    let message = body
        .pointer("/choices/0/message")
        .ok_or_else(|| GatewayError::BadResponse("response has no choices[0].message".into()))?;
    let content = message
        .get("content")
        .and_then(Value::as_str)
        .map(str::to_string);
    let tool_calls = message
        .get("tool_calls")
        .and_then(Value::as_array)
        .map(|calls| {
            calls
                .iter()
                .map(|call| RawToolCall {
                    id: call.get("id").and_then(Value::as_str).unwrap_or("").to_string(),
                    name: call
                        .pointer("/function/name")
                        .and_then(Value::as_str)
                        .unwrap_or("")
                        .to_string(),
                    arguments: call
                        .pointer("/function/arguments")
                        .and_then(Value::as_str)
                        .unwrap_or("")
                        .to_string(),
                })
                .collect()
        })
        .unwrap_or_default();
    Ok(ProviderResponse { content, tool_calls })
}

impl Provider for LiveProvider {
    fn send(&self, request: &CompletionRequest) -> Result<ProviderResponse, GatewayError> {
        let body = wire_body(request);
        let mut backoff = self.config.initial_backoff;
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.post_once(&body) {
                Ok(value) => return parse_wire_response(&value),
                Err(Attempt::Fatal(err)) => return Err(err),
                Err(Attempt::Transient(message)) => {
                    tracing::warn!(attempt, %message, "transient provider failure");
                    last = message;
                    if attempt < attempts {
                        thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(GatewayError::Transport {
            attempts,
            message: last,
        })
    }

    fn label(&self) -> String {
        format!("live:{}", self.config.endpoint)
    }
}
