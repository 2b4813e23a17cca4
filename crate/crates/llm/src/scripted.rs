use std::collections::VecDeque;
use std::sync::Mutex;

use crate::error::GatewayError;
use crate::message::CompletionRequest;
use crate::provider::{Provider, ProviderResponse};

type Handler = dyn Fn(&CompletionRequest) -> Result<ProviderResponse, GatewayError> + Send + Sync;

/// Programmable provider for tests and offline demos. Every request it sees is
/// kept so tests can inspect the assembled prompts.
pub struct ScriptedProvider {
    handler: Box<Handler>,
    calls: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedProvider {
    pub fn new(
        handler: impl Fn(&CompletionRequest) -> Result<ProviderResponse, GatewayError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            handler: Box::new(handler),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Answers every request with the same text.
    pub fn always_text(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new(move |_| Ok(ProviderResponse::text(text.clone())))
    }

    /// Plays the responses in order, then fails.
    pub fn sequence(responses: impl IntoIterator<Item = ProviderResponse>) -> Self {
        let queue = Mutex::new(responses.into_iter().collect::<VecDeque<_>>());
        Self::new(move |_| {
            queue
                .lock()
                .expect("script queue poisoned")
                .pop_front()
                .ok_or_else(|| GatewayError::Script("script exhausted".into()))
        })
    }

    /// Fails every request as a transport outage would.
    pub fn unavailable() -> Self {
        Self::new(|_| {
            Err(GatewayError::Transport {
                attempts: 3,
                message: "connection refused".into(),
            })
        })
    }

    pub fn calls(&self) -> Vec<CompletionRequest> {
        self.calls.lock().expect("call log poisoned").clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().expect("call log poisoned").len()
    }
}

impl Provider for ScriptedProvider {
    fn send(&self, request: &CompletionRequest) -> Result<ProviderResponse, GatewayError> {
        self.calls
            .lock()
            .expect("call log poisoned")
            .push(request.clone());
        (self.handler)(request)
    }

    fn label(&self) -> String {
        "scripted".to_string()
    }
}
