//! The describe/visualize tools: schemas, argument validation, execution
//! against the health store, and the tool-need / forced-call chain.

use std::collections::BTreeSet;

use chrono::{DateTime, FixedOffset};
use coach_healthdata::{
    parse_date, parse_timestamp, AggregationMode, BucketSummary, DataSourceId, Granularity, HealthDataError,
    HealthStore, RangeEdge, SourceCatalog, WorkoutTypeSummary,
};
use coach_llm::{complete, ChatMessage, GatewayError, Provider, ToolCall, ToolName, ToolSchema};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::assemble::{assemble_prompt, PromptContext, PromptStage};
use crate::dialogue::normalize_verdict;
use crate::error::Result;
use crate::strategy::InternalStrategy;

/// Schemas published to the provider. Parameter names follow the few-shot
/// examples in the prompt catalog.
pub fn tool_schemas(catalog: &SourceCatalog) -> Vec<ToolSchema> {
    let sources: Vec<&str> = catalog.iter().map(|info| info.name.as_str()).collect();
    let granularities: Vec<&str> = Granularity::ALL.iter().map(|g| g.as_str()).collect();
    vec![
        ToolSchema {
            name: ToolName::Describe,
            description: "Summarize the user's health data from one source between start and end, \
                          aggregated at the given granularity."
                .into(),
            parameters: json!({
                "type": "object",
                "properties": {
                    "data_source_name": {"type": "string", "enum": sources},
                    "start": {"type": "string", "description": "Start time, e.g. 2024-02-23 00:00:00"},
                    "end": {"type": "string", "description": "End time, e.g. 2024-02-23 23:59:59"},
                    "granularity": {"type": "string", "enum": granularities},
                },
                "required": ["data_source_name", "start", "end", "granularity"],
            }),
        },
        ToolSchema {
            name: ToolName::Visualize,
            description: "Show the user a chart of one health data source for the calendar day, week or \
                          month containing date. Returns the same summary as describe."
                .into(),
            parameters: json!({
                "type": "object",
                "properties": {
                    "data_source_name": {"type": "string", "enum": sources},
                    "date": {"type": "string", "description": "Reference date, e.g. 2024-03-01"},
                    "granularity": {"type": "string", "enum": granularities},
                },
                "required": ["data_source_name", "date", "granularity"],
            }),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolArgumentError {
    #[error("missing argument '{0}'")]
    Missing(&'static str),
    #[error("unknown data source '{0}'")]
    UnknownSource(String),
    #[error("source not shared: {0}")]
    NotShared(String),
    #[error("invalid granularity '{0}' (expected one of hour, day, week, month)")]
    InvalidGranularity(String),
    #[error("invalid {argument} '{value}'")]
    InvalidTimestamp { argument: &'static str, value: String },
    #[error("end precedes start")]
    ReversedRange,
}

/// A validated tool call.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolQuery {
    pub tool: ToolName,
    pub source: DataSourceId,
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
    pub granularity: Granularity,
}

fn required<'a>(call: &'a ToolCall, key: &'static str) -> Result<&'a str, ToolArgumentError> {
    call.argument(key)
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .ok_or(ToolArgumentError::Missing(key))
}

/// Checks a call against the catalog, the session's shared sources, the
/// granularity enum and the timestamp formats. `describe` takes start and end
/// (or a date, mapped to its calendar bucket); `visualize` takes a date.
pub fn validate_call(
    call: &ToolCall,
    store: &HealthStore,
    shared: Option<&BTreeSet<String>>,
) -> Result<ToolQuery, ToolArgumentError> {
    let name = required(call, "data_source_name")?;
    let source = store
        .resolve(name)
        .map_err(|_| ToolArgumentError::UnknownSource(name.to_string()))?;
    if shared.is_some_and(|set| !set.contains(name)) {
        return Err(ToolArgumentError::NotShared(name.to_string()));
    }
    let raw_granularity = required(call, "granularity")?;
    let granularity: Granularity = raw_granularity
        .parse()
        .map_err(|_| ToolArgumentError::InvalidGranularity(raw_granularity.to_string()))?;

    let tz = store.time_zone();
    let by_date = |raw: &str| {
        parse_date(raw)
            .map(|date| store.bucket_range(date, granularity))
            .map_err(|_| ToolArgumentError::InvalidTimestamp {
                argument: "date",
                value: raw.to_string(),
            })
    };
    let (start, end) = match call.name {
        ToolName::Visualize => by_date(required(call, "date")?)?,
        ToolName::Describe => match (call.argument("start"), call.argument("end")) {
            (None, None) if call.argument("date").is_some() => by_date(required(call, "date")?)?,
            _ => {
                let start_raw = required(call, "start")?;
                let end_raw = required(call, "end")?;
                let start = parse_timestamp(start_raw, tz, RangeEdge::Start).map_err(|_| {
                    ToolArgumentError::InvalidTimestamp {
                        argument: "start",
                        value: start_raw.to_string(),
                    }
                })?;
                let end = parse_timestamp(end_raw, tz, RangeEdge::End).map_err(|_| {
                    ToolArgumentError::InvalidTimestamp {
                        argument: "end",
                        value: end_raw.to_string(),
                    }
                })?;
                (start, end)
            }
        },
    };
    if end < start {
        return Err(ToolArgumentError::ReversedRange);
    }
    Ok(ToolQuery {
        tool: call.name,
        source,
        start,
        end,
        granularity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChartPayload {
    Buckets { buckets: Vec<BucketSummary> },
    Workouts { rows: Vec<WorkoutTypeSummary> },
}

/// The data behind one chart: the query and the aggregates it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartData {
    pub source: DataSourceId,
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
    pub granularity: Granularity,
    pub unit: String,
    pub description: String,
    pub payload: ChartPayload,
}

impl ChartData {
    /// Aggregates the query and renders the model-facing text from the same
    /// aggregates, so the chart and the text can never disagree.
    pub fn compute(store: &HealthStore, query: &ToolQuery) -> Result<(Self, String), HealthDataError> {
        let info = store.source_info(&query.source)?;
        let budget = store.config().line_budget;
        let (payload, text) = if info.aggregation == AggregationMode::ByType {
            let rows = store.workout_summaries(query.start, query.end)?;
            let text = coach_healthdata::render::render_workouts(info, &rows, budget);
            (ChartPayload::Workouts { rows }, text)
        } else {
            let buckets = store.aggregate(&query.source, query.start, query.end, query.granularity)?;
            let text = coach_healthdata::render::render_buckets(info, &buckets, budget);
            (ChartPayload::Buckets { buckets }, text)
        };
        let chart = ChartData {
            source: query.source.clone(),
            start: query.start,
            end: query.end,
            granularity: query.granularity,
            unit: info.unit.clone(),
            description: info.description.clone(),
            payload,
        };
        Ok((chart, text))
    }
}

/// A chart shown to the user, kept with the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualizationEvent {
    pub id: String,
    pub tool_call_id: String,
    pub turn_index: usize,
    #[serde(flatten)]
    pub chart: ChartData,
}

impl VisualizationEvent {
    /// Recomputes the payload from the current store contents.
    pub fn recompute(&self, store: &HealthStore) -> Result<ChartData, HealthDataError> {
        let query = ToolQuery {
            tool: ToolName::Visualize,
            source: self.chart.source.clone(),
            start: self.chart.start,
            end: self.chart.end,
            granularity: self.chart.granularity,
        };
        ChartData::compute(store, &query).map(|(chart, _)| chart)
    }
}

/// Result of running one tool call. Failures become `error: ...` text so the
/// model can see what went wrong and recover.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolExecution {
    pub text: String,
    pub chart: Option<ChartData>,
}

pub fn execute_query(store: &HealthStore, query: &ToolQuery) -> ToolExecution {
    match ChartData::compute(store, query) {
        Ok((chart, text)) => ToolExecution {
            text,
            chart: (query.tool == ToolName::Visualize).then_some(chart),
        },
        Err(err) => ToolExecution {
            text: format!("error: {err}"),
            chart: None,
        },
    }
}

pub fn execute_tool(store: &HealthStore, call: &ToolCall, shared: Option<&BTreeSet<String>>) -> ToolExecution {
    match validate_call(call, store, shared) {
        Ok(query) => execute_query(store, &query),
        Err(err) => ToolExecution {
            text: format!("error: {err}"),
            chart: None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToolNeedDecision {
    Yes,
    No,
}

pub fn parse_tool_need(raw: &str) -> Option<ToolNeedDecision> {
    match normalize_verdict(raw).as_str() {
        "yes" => Some(ToolNeedDecision::Yes),
        "no" => Some(ToolNeedDecision::No),
        _ => None,
    }
}

/// Asks whether a tool-free reply should be augmented with health data.
/// Unparseable output counts as No.
pub fn predict_tool_need(
    provider: &dyn Provider,
    ctx: &PromptContext<'_>,
    strategy: InternalStrategy,
    candidate: &ChatMessage,
) -> Result<ToolNeedDecision> {
    let request = assemble_prompt(&PromptStage::ToolNeedPredict { strategy, candidate }, ctx);
    let reply = complete(provider, &request)?;
    Ok(parse_tool_need(&reply.content).unwrap_or_else(|| {
        tracing::warn!(output = %reply.content, "unparseable tool-need verdict; treating as no");
        ToolNeedDecision::No
    }))
}

/// A forced visualize call that passed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedToolCall {
    pub message: ChatMessage,
    pub query: ToolQuery,
}

/// Note appended to the request when the first forced call was unusable.
pub fn reask_note(reason: &str) -> String {
    format!("The previous tool call could not be used ({reason}). Call visualize again with valid arguments.")
}

/// Forces a visualize call. An invalid or malformed call gets one re-ask;
/// `Ok(None)` means both attempts were unusable and augmentation should be
/// dropped. Gateway errors, including a forced-tool contract violation, are
/// returned to the caller.
pub fn generate_forced_tool_call(
    provider: &dyn Provider,
    ctx: &PromptContext<'_>,
    strategy: InternalStrategy,
    candidate: &ChatMessage,
    validate: impl Fn(&ToolCall) -> Result<ToolQuery, ToolArgumentError>,
) -> Result<Option<ForcedToolCall>> {
    let mut request = assemble_prompt(&PromptStage::ToolCallGenerate { strategy, candidate }, ctx);
    for attempt in 0..2 {
        let reason = match complete(provider, &request) {
            Ok(message) => match validate(&message.tool_calls[0]) {
                Ok(query) => return Ok(Some(ForcedToolCall { message, query })),
                Err(err) => err.to_string(),
            },
            Err(err @ GatewayError::MalformedToolArguments { .. }) => err.to_string(),
            Err(err) => return Err(err.into()),
        };
        tracing::warn!(attempt, %reason, "unusable forced tool call");
        if attempt == 0 {
            request.messages.push(ChatMessage::assistant(reask_note(&reason)));
        }
    }
    Ok(None)
}
