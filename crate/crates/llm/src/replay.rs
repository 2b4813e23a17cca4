//! Record/replay cassettes.
//!
//! A cassette maps [`record_key`] hashes to stored provider responses. It is a
//! pretty-printed JSON file so fixtures can be reviewed in diffs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::GatewayError;
use crate::message::CompletionRequest;
use crate::provider::{record_key, Provider, ProviderResponse};

const CASSETTE_VERSION: u32 = 1;
const PREVIEW_CHARS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub model_id: String,
    /// Start of the last request message, for humans reading the file.
    pub request_preview: String,
    pub response: ProviderResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cassette {
    pub version: u32,
    pub entries: BTreeMap<String, CassetteEntry>,
}

impl Default for Cassette {
    fn default() -> Self {
        Self {
            version: CASSETTE_VERSION,
            entries: BTreeMap::new(),
        }
    }
}

impl Cassette {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        let cassette: Cassette = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))?;
        if cassette.version != CASSETTE_VERSION {
            return Err(GatewayError::Cassette(format!(
                "{}: unsupported cassette version {}",
                path.display(),
                cassette.version
            )));
        }
        Ok(cassette)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("cassette serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GatewayError> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| GatewayError::Cassette(e.to_string()))?;
        }
        fs::write(path, self.to_json())
            .map_err(|e| GatewayError::Cassette(format!("{}: {e}", path.display())))
    }

    pub fn insert(&mut self, request: &CompletionRequest, response: ProviderResponse) {
        let preview: String = request
            .messages
            .last()
            .map(|m| m.content.chars().take(PREVIEW_CHARS).collect())
            .unwrap_or_default();
        self.entries.insert(
            record_key(request),
            CassetteEntry {
                model_id: request.model_id.clone(),
                request_preview: preview,
                response,
            },
        );
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// SHA-256 of a cassette file's bytes, for result manifests.
pub fn file_sha256(path: impl AsRef<Path>) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Plays back a cassette. Unknown requests fail with a cache miss; nothing is
/// ever sent over the network.
pub struct ReplayProvider {
    cassette: Cassette,
    label: String,
}

impl ReplayProvider {
    pub fn new(cassette: Cassette) -> Self {
        Self {
            cassette,
            label: "replay".to_string(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let mut provider = Self::new(Cassette::load(path)?);
        provider.label = format!("replay:{}", path.display());
        Ok(provider)
    }
}

impl Provider for ReplayProvider {
    fn send(&self, request: &CompletionRequest) -> Result<ProviderResponse, GatewayError> {
        let key = record_key(request);
        self.cassette
            .entries
            .get(&key)
            .map(|entry| entry.response.clone())
            .ok_or(GatewayError::CacheMiss { key })
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Forwards to an inner provider and records every exchange.
pub struct RecordingProvider<P> {
    inner: P,
    cassette: Mutex<Cassette>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            cassette: Mutex::new(Cassette::default()),
        }
    }

    pub fn cassette(&self) -> Cassette {
        self.cassette.lock().expect("cassette lock poisoned").clone()
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn send(&self, request: &CompletionRequest) -> Result<ProviderResponse, GatewayError> {
        let response = self.inner.send(request)?;
        self.cassette
            .lock()
            .expect("cassette lock poisoned")
            .insert(request, response.clone());
        Ok(response)
    }

    fn label(&self) -> String {
        format!("recording:{}", self.inner.label())
    }
}
