#![allow(dead_code)]

use std::sync::Arc;

use chrono::NaiveDate;
use coach_core::{CoachConfig, Stage};
use coach_healthdata::{HealthStore, StoreConfig};
use coach_llm::{CompletionRequest, GatewayError, ProviderResponse, ScriptedProvider};

pub fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, 1).unwrap()
}

pub fn config() -> CoachConfig {
    CoachConfig {
        today: Some(today()),
        ..CoachConfig::default()
    }
}

pub fn step(start: &str, end: &str, value: f64, device: &str) -> String {
    format!(
        r#"{{"source":"health.stepcount","start":"{start}","end":"{end}","value":{value},"unit":"steps","device":"{device}"}}"#
    )
}

pub fn store_with(lines: &[String]) -> Arc<HealthStore> {
    let store = HealthStore::in_memory(StoreConfig::default());
    let report = store.ingest_str(&lines.join("\n")).unwrap();
    assert_eq!(report.rejected_count(), 0, "{:?}", report.rejected);
    Arc::new(store)
}

/// One day of 10968 steps from the watch.
pub fn day_store() -> Arc<HealthStore> {
    store_with(&[step("2024-02-23T08:00:00Z", "2024-02-23T20:00:00Z", 10968.0, "Apple Watch")])
}

/// Provider that answers by chain stage.
pub fn staged(
    f: impl Fn(Stage, &CompletionRequest) -> Result<ProviderResponse, GatewayError> + Send + Sync + 'static,
) -> ScriptedProvider {
    ScriptedProvider::new(move |req| {
        let stage = Stage::detect(req).expect("request from a known stage");
        f(stage, req)
    })
}

pub fn text(s: &str) -> Result<ProviderResponse, GatewayError> {
    Ok(ProviderResponse::text(s))
}

pub fn visualize(id: &str, args: &str) -> Result<ProviderResponse, GatewayError> {
    Ok(ProviderResponse::tool_call(id, "visualize", args))
}

pub const STEP_MONTH: &str = r#"{"data_source_name":"health.stepcount","date":"2024-02-01","granularity":"month"}"#;
