//! Fixtures shared by the service tests and the acceptance suite.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use chrono::{NaiveDate, TimeZone, Utc};
use coach_core::demo::DEMO_USER_MESSAGES;
use coach_core::{transcript, CoachConfig, Orchestrator, Session};
use coach_healthdata::{HealthStore, StoreConfig};
use coach_llm::Provider;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, 1).unwrap()
}

pub fn config() -> CoachConfig {
    CoachConfig {
        today: Some(today()),
        ..CoachConfig::default()
    }
}

/// Store holding the step and workout fixture.
pub fn step_store() -> Arc<HealthStore> {
    let store = HealthStore::in_memory(StoreConfig::default());
    let text = std::fs::read_to_string(fixture("steps.ndjson")).unwrap();
    store.ingest_str(&text).unwrap();
    Arc::new(store)
}

pub fn cassette_path() -> PathBuf {
    fixture("demo/cassette.json")
}

pub fn golden_transcript_path() -> PathBuf {
    fixture("demo/transcript.txt")
}

/// Runs the eight-message demo conversation and returns its transcript.
pub fn demo_conversation(provider: Arc<dyn Provider>) -> (Session, String) {
    let orchestrator = Orchestrator::new(provider, step_store(), config());
    let created = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
    let mut session = Session::with_created_at("demo", created);
    for message in DEMO_USER_MESSAGES {
        orchestrator.handle_user_message(&mut session, message).unwrap();
    }
    let text = transcript(&session);
    (session, text)
}
