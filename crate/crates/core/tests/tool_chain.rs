mod common;

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use coach_core::demo::demo_provider;
use coach_core::tools::{execute_query, reask_note};
use coach_core::{
    execute_tool, generate_forced_tool_call, generate_response, predict_tool_need, tool_schemas, validate_call,
    ChartPayload, CoreError, DialogueStateId, InternalStrategy, ModelSettings, PromptContext, ToolNeedDecision,
};
use coach_healthdata::{HealthStore, SourceCatalog, StoreConfig};
use coach_llm::{ChatMessage, GatewayError, ProviderResponse, ScriptedProvider, ToolCall, ToolName};
use common::*;
use proptest::prelude::*;

fn call(name: ToolName, args: &[(&str, &str)]) -> ToolCall {
    ToolCall {
        id: "call_1".into(),
        name,
        arguments: args.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect::<BTreeMap<_, _>>(),
    }
}

fn describe_day(store: &HealthStore, granularity: &str) -> String {
    execute_tool(
        store,
        &call(
            ToolName::Describe,
            &[
                ("data_source_name", "health.stepcount"),
                ("start", "2024-02-23 00:00:00"),
                ("end", "2024-02-23 23:59:59"),
                ("granularity", granularity),
            ],
        ),
        None,
    )
    .text
}

#[test]
fn describe_renders_the_day_fixture() {
    let text = describe_day(&day_store(), "day");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("health.stepcount: "));
    assert_eq!(
        lines[1],
        "2024-02-23-00-00 to 2024-02-23-23-59: 10968.00 steps from Apple Watch (1 entries)"
    );
}

#[test]
fn describe_renders_the_hourly_fixture() {
    let mut lines = vec![
        step("2024-02-23T00:10:00Z", "2024-02-23T00:20:00Z", 13.0, "iPhone"),
        step("2024-02-23T01:10:00Z", "2024-02-23T01:20:00Z", 34.0, "Apple Watch"),
        step("2024-02-23T08:30:00Z", "2024-02-23T08:40:00Z", 122.0, "Apple Watch"),
    ];
    // 19 samples in the 09:00 hour summing to 988.
    for i in 0..19 {
        let value = if i == 0 { 988.0 - 18.0 * 52.0 } else { 52.0 };
        lines.push(step(
            &format!("2024-02-23T09:{:02}:00Z", i * 3),
            &format!("2024-02-23T09:{:02}:30Z", i * 3),
            value,
            "Apple Watch",
        ));
    }
    let text = describe_day(&store_with(&lines), "hour");
    let body: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(
        body,
        [
            "2024-02-23-00-00 to 2024-02-23-00-59: 13.00 steps from iPhone (1 entries)",
            "2024-02-23-01-00 to 2024-02-23-01-59: 34.00 steps from Apple Watch (1 entries)",
            "2024-02-23-08-00 to 2024-02-23-08-59: 122.00 steps from Apple Watch (1 entries)",
            "2024-02-23-09-00 to 2024-02-23-09-59: 988.00 steps from Apple Watch (19 entries)",
        ]
    );
}

#[test]
fn visualize_matches_describe_and_emits_chart() {
    let store = day_store();
    let described = describe_day(&store, "day");
    let shown = execute_tool(
        &store,
        &call(
            ToolName::Visualize,
            &[("data_source_name", "health.stepcount"), ("date", "2024-02-23"), ("granularity", "day")],
        ),
        None,
    );
    assert_eq!(shown.text, described);
    let chart = shown.chart.expect("visualize produces a chart");
    assert_eq!(chart.unit, "steps");
    match &chart.payload {
        ChartPayload::Buckets { buckets } => {
            assert_eq!(buckets.len(), 1);
            assert_eq!(buckets[0].value, 10968.0);
        }
        other => panic!("unexpected payload {other:?}"),
    }
}

#[test]
fn reversed_describe_range_is_reported_to_the_model() {
    let out = execute_tool(
        &day_store(),
        &call(
            ToolName::Describe,
            &[
                ("data_source_name", "health.stepcount"),
                ("start", "2024-02-24 00:00:00"),
                ("end", "2024-02-23 00:00:00"),
                ("granularity", "day"),
            ],
        ),
        None,
    );
    assert_eq!(out.text, "error: end precedes start");
    assert!(out.chart.is_none());
}

#[test]
fn workout_chart_rows_match_the_text() {
    let base = Utc.with_ymd_and_hms(2024, 3, 4, 7, 0, 0).unwrap();
    let mut lines = Vec::new();
    for (i, minutes) in [30, 60].into_iter().enumerate() {
        let start = base + Duration::days(i as i64);
        let end = start + Duration::minutes(minutes);
        lines.push(format!(
            r#"{{"source":"health.workout","workout_type":"walking","start":"{}","end":"{}"}}"#,
            start.to_rfc3339(),
            end.to_rfc3339()
        ));
    }
    let store = store_with(&lines);
    let out = execute_tool(
        &store,
        &call(
            ToolName::Visualize,
            &[("data_source_name", "health.workout"), ("date", "2024-03-15"), ("granularity", "month")],
        ),
        None,
    );
    assert!(out.text.ends_with("\n - walking: 2 workouts, 45.00 mins/workout, 90.00 mins  (1h30m)  total"));
    match out.chart.unwrap().payload {
        ChartPayload::Workouts { rows } => {
            assert_eq!(rows.len(), 1);
            assert_eq!(rows[0].count, 2);
            assert_eq!(rows[0].total_minutes, 90.0);
        }
        other => panic!("unexpected payload {other:?}"),
    }
}

fn ctx<'a>(
    history: &'a [ChatMessage],
    state: DialogueStateId,
    model: &'a ModelSettings,
    tools: &'a [coach_llm::ToolSchema],
) -> PromptContext<'a> {
    PromptContext {
        history,
        state,
        today: today(),
        model,
        tools,
    }
}

fn with_ctx<T>(state: DialogueStateId, f: impl FnOnce(&PromptContext<'_>) -> T) -> T {
    let history = vec![ChatMessage::user("How much should I walk?")];
    let model = ModelSettings::default();
    let tools = tool_schemas(&SourceCatalog::default());
    f(&ctx(&history, state, &model, &tools))
}

#[test]
fn tool_need_parsing_and_faithful_program_answer() {
    let candidate = ChatMessage::assistant("You'll design your own plan.");
    for (output, expected) in [("yes", ToolNeedDecision::Yes), ("No.", ToolNeedDecision::No), ("hmm", ToolNeedDecision::No)] {
        let provider = ScriptedProvider::always_text(output);
        let got = with_ctx(DialogueStateId::GoalSetting, |c| {
            predict_tool_need(&provider, c, InternalStrategy::Question, &candidate).unwrap()
        });
        assert_eq!(got, expected, "{output}");
    }
    let provider = demo_provider();
    let got = with_ctx(DialogueStateId::Program, |c| {
        predict_tool_need(&provider, c, InternalStrategy::Structure, &candidate).unwrap()
    });
    assert_eq!(got, ToolNeedDecision::No);
}

#[test]
fn generated_responses_keep_tool_calls() {
    let provider = ScriptedProvider::sequence([
        ProviderResponse::text("Sounds like a plan."),
        ProviderResponse::tool_call("v1", "visualize", STEP_MONTH),
    ]);
    let (plain, with_call) = with_ctx(DialogueStateId::GoalSetting, |c| {
        (
            generate_response(&provider, c, InternalStrategy::Affirm, true).unwrap(),
            generate_response(&provider, c, InternalStrategy::GivingInformation, true).unwrap(),
        )
    });
    assert!(!plain.message.has_tool_calls());
    assert_eq!(plain.strategy, InternalStrategy::Affirm);
    assert_eq!(with_call.message.tool_calls[0].name, ToolName::Visualize);
    assert_eq!(with_call.message.tool_calls[0].argument("granularity"), Some("month"));
}

fn forced(responses: Vec<ProviderResponse>) -> (Result<Option<coach_core::tools::ForcedToolCall>, CoreError>, ScriptedProvider) {
    let provider = ScriptedProvider::sequence(responses);
    let store = day_store();
    let candidate = ChatMessage::assistant("Try walking more.");
    let result = with_ctx(DialogueStateId::GoalSetting, |c| {
        generate_forced_tool_call(&provider, c, InternalStrategy::AdviseWithPermission, &candidate, |call| {
            validate_call(call, &store, None)
        })
    });
    (result, provider)
}

#[test]
fn forced_call_returns_the_visualize_call() {
    let (result, provider) = forced(vec![ProviderResponse::tool_call("v", "visualize", STEP_MONTH)]);
    let call = result.unwrap().unwrap();
    assert_eq!(call.message.tool_calls[0].name, ToolName::Visualize);
    assert_eq!(call.query.start.to_rfc3339(), "2024-02-01T00:00:00+00:00");
    assert_eq!(provider.calls()[0].forced_tool, Some(ToolName::Visualize));
}

#[test]
fn forced_call_rejects_describe() {
    let (result, _) = forced(vec![ProviderResponse::tool_call(
        "d",
        "describe",
        r#"{"data_source_name":"health.stepcount","start":"2024-02-01","end":"2024-02-02","granularity":"day"}"#,
    )]);
    assert!(matches!(
        result,
        Err(CoreError::Provider(GatewayError::ForcedToolViolation { .. }))
    ));
}

#[test]
fn invalid_forced_call_gets_one_reask() {
    let bad = r#"{"data_source_name":"health.stepcount","date":"2024-02-01","granularity":"fortnight"}"#;
    let (result, provider) = forced(vec![
        ProviderResponse::tool_call("v", "visualize", bad),
        ProviderResponse::tool_call("v", "visualize", STEP_MONTH),
    ]);
    assert!(result.unwrap().is_some());
    let calls = provider.calls();
    assert_eq!(calls.len(), 2);
    let note = &calls[1].messages.last().unwrap().content;
    assert_eq!(
        note,
        &reask_note("invalid granularity 'fortnight' (expected one of hour, day, week, month)")
    );
    assert_eq!(calls[1].messages.len(), calls[0].messages.len() + 1);
}

#[test]
fn twice_invalid_forced_call_is_abandoned() {
    let (result, provider) = forced(vec![
        ProviderResponse::tool_call("v", "visualize", "{not json"),
        ProviderResponse::tool_call("v", "visualize", r#"{"data_source_name":"health.sleep","date":"2024-02-01","granularity":"day"}"#),
    ]);
    assert!(result.unwrap().is_none());
    assert_eq!(provider.call_count(), 2);
}

#[test]
fn transport_failure_propagates() {
    let provider = ScriptedProvider::unavailable();
    let store = day_store();
    let candidate = ChatMessage::assistant("x");
    let result = with_ctx(DialogueStateId::GoalSetting, |c| {
        generate_forced_tool_call(&provider, c, InternalStrategy::Question, &candidate, |call| {
            validate_call(call, &store, None)
        })
    });
    assert!(matches!(result, Err(CoreError::Provider(GatewayError::Transport { .. }))));
}

fn random_store(values: &[(i64, u32)]) -> HealthStore {
    let base = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let lines: Vec<String> = values
        .iter()
        .map(|(minutes, v)| {
            let start = base + Duration::minutes(*minutes);
            step(&start.to_rfc3339(), &(start + Duration::minutes(1)).to_rfc3339(), *v as f64, "iPhone")
        })
        .collect();
    let store = HealthStore::in_memory(StoreConfig::default());
    store.ingest_str(&lines.join("\n")).unwrap();
    store
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn visualize_text_equals_describe_text(
        values in prop::collection::vec((0i64..60 * 24 * 90, 1u32..5000), 0..200),
        day in 0i64..90,
        g in 0usize..4,
    ) {
        let store = random_store(&values);
        let date = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + Duration::days(day);
        let granularity = ["hour", "day", "week", "month"][g];
        let date_text = date.to_string();
        let viz = call(ToolName::Visualize, &[
            ("data_source_name", "health.stepcount"), ("date", &date_text), ("granularity", granularity),
        ]);
        let query = validate_call(&viz, &store, None).unwrap();
        let start = query.start.format("%Y-%m-%d %H:%M:%S").to_string();
        let end = query.end.format("%Y-%m-%d %H:%M:%S").to_string();
        let desc = call(ToolName::Describe, &[
            ("data_source_name", "health.stepcount"), ("start", &start), ("end", &end), ("granularity", granularity),
        ]);
        let shown = execute_tool(&store, &viz, None);
        prop_assert_eq!(&shown.text, &execute_tool(&store, &desc, None).text);
        prop_assert_eq!(shown.text, execute_query(&store, &query).text);
    }
}
