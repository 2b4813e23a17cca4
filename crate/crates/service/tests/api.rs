mod support;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use coach_core::demo::{self, demo_provider, DEMO_USER_MESSAGES};
use coach_core::{Orchestrator, OutputItem, Session, SessionStore, Stage};
use coach_llm::{CompletionRequest, Provider, ProviderResponse, Role, ScriptedProvider};
use coach_service::{router, ApiEvent, AppState, EventKind};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Server {
    app: Router,
    _dir: tempfile::TempDir,
}

fn server_with(provider: impl Provider + 'static, token: Option<&str>) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let sessions = SessionStore::open(dir.path()).unwrap();
    let orchestrator = Arc::new(Orchestrator::new(Arc::new(provider), support::step_store(), support::config()));
    let state = AppState::new(orchestrator, sessions).with_api_token(token.map(str::to_string));
    Server {
        app: router(state),
        _dir: dir,
    }
}

fn server(provider: impl Provider + 'static) -> Server {
    server_with(provider, None)
}

struct Reply {
    status: StatusCode,
    content_type: String,
    body: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }

    /// Parses a server-sent event body, checking each frame's `event` and
    /// `id` fields against its payload.
    fn events(&self) -> Vec<ApiEvent> {
        assert!(self.content_type.starts_with("text/event-stream"), "{}", self.content_type);
        self.body
            .split("\n\n")
            .filter(|frame| !frame.trim().is_empty())
            .map(|frame| {
                let field = |name: &str| {
                    frame
                        .lines()
                        .find_map(|l| l.strip_prefix(&format!("{name}: ")))
                        .unwrap_or_else(|| panic!("frame without {name}: {frame}"))
                };
                let event: ApiEvent = serde_json::from_str(field("data")).unwrap();
                assert_eq!(field("event"), event.kind.name());
                assert_eq!(field("id"), event.sequence.to_string());
                event
            })
            .collect()
    }
}

impl Server {
    async fn call(&self, request: Request<Body>) -> Reply {
        let response = self.app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let content_type = response
            .headers()
            .get(header::CONTENT_TYPE)
            .map(|v| v.to_str().unwrap().to_string())
            .unwrap_or_default();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        Reply {
            status,
            content_type,
            body: String::from_utf8(bytes.to_vec()).unwrap(),
        }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.call(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    async fn post_json(&self, uri: &str, body: Value) -> Reply {
        let request = Request::post(uri)
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        self.call(request).await
    }

    async fn create(&self) -> String {
        let reply = self.call(Request::post("/sessions").body(Body::empty()).unwrap()).await;
        assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.body);
        reply.json()["id"].as_str().unwrap().to_string()
    }

    async fn say(&self, id: &str, text: &str) -> Reply {
        self.post_json(&format!("/sessions/{id}/messages"), json!({ "text": text })).await
    }
}

fn kinds(events: &[ApiEvent]) -> Vec<&'static str> {
    events.iter().map(|e| e.kind.name()).collect()
}

#[tokio::test]
async fn created_sessions_start_in_onboarding_with_distinct_ids() {
    let server = server(demo_provider());
    let a = server.create().await;
    let b = server.create().await;
    assert_ne!(a, b);
    let reply = server.get(&format!("/sessions/{a}")).await;
    assert_eq!(reply.status, StatusCode::OK);
    assert_eq!(reply.json()["state"], "Onboarding");
    assert_eq!(reply.json()["history"], json!([]));
}

#[tokio::test]
async fn create_without_a_configured_store_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::unconfigured(SessionStore::open(dir.path()).unwrap()));
    let response = app
        .oneshot(Request::post("/sessions").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(response.status(), StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn first_turn_streams_state_change_message_done() {
    let server = server(demo_provider());
    let id = server.create().await;
    let reply = server.say(&id, "Hi there!").await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.body);
    let events = reply.events();
    assert_eq!(kinds(&events), ["state_change", "message", "done"]);
    assert_eq!(events.iter().map(|e| e.sequence).collect::<Vec<_>>(), [1, 2, 3]);
    match &events[0].kind {
        EventKind::StateChange { from, to } => assert_eq!((from.to_string(), to.to_string()), ("Onboarding".into(), "Program".into())),
        other => panic!("{other:?}"),
    }
    let second = server.say(&id, "I'm Sam and I'm 34.").await.events();
    assert_eq!(second[0].sequence, 4, "sequence numbers continue across turns");
}

/// The events of each turn, with the `done` marker removed, must mirror the
/// orchestrator's own turn output for the same conversation.
#[tokio::test]
async fn stream_order_matches_turn_output_for_the_demo_conversation() {
    let server = server(demo_provider());
    let id = server.create().await;

    let orchestrator = Orchestrator::new(Arc::new(demo_provider()), support::step_store(), support::config());
    let mut direct = Session::new("direct");

    let mut all = Vec::new();
    for message in DEMO_USER_MESSAGES {
        let events = server.say(&id, message).await.events();
        let output = orchestrator.handle_user_message(&mut direct, message).unwrap();

        let mut expected = Vec::new();
        if let Some(change) = output.state_change {
            expected.push(EventKind::StateChange {
                from: change.from,
                to: change.to,
            });
        }
        for item in &output.items {
            expected.push(match item {
                OutputItem::Message { content, strategy } => EventKind::Message {
                    content: content.clone(),
                    strategy: Some(*strategy),
                },
                OutputItem::Visualization { event_id } => {
                    let chart = &direct.event(event_id).unwrap().chart;
                    EventKind::Visualization {
                        event_id: event_id.clone(),
                        source: chart.source.to_string(),
                        granularity: chart.granularity.as_str().to_string(),
                    }
                }
            });
        }
        expected.push(EventKind::Done);
        let got: Vec<EventKind> = events.iter().map(|e| e.kind.clone()).collect();
        assert_eq!(got, expected, "turn {message:?}");
        assert!(events.iter().all(|e| e.turn_index == output.turn_index));
        all.extend(events);
    }

    let sequences: Vec<u64> = all.iter().map(|e| e.sequence).collect();
    assert!(sequences.windows(2).all(|w| w[1] == w[0] + 1));
    assert_eq!(sequences[0], 1);

    let replayed: Vec<ApiEvent> = server.get(&format!("/sessions/{id}/events")).await.json().as_array().unwrap().iter().map(|v| serde_json::from_value(v.clone()).unwrap()).collect();
    assert_eq!(replayed, all, "the event log reproduces the live streams");
    let tail: Vec<Value> = server.get(&format!("/sessions/{id}/events?after=5")).await.json().as_array().unwrap().clone();
    assert_eq!(tail.len(), all.len() - 5);
    assert_eq!(tail[0]["sequence"], 6);
}

/// Blocks the first provider call until released.
fn gated_provider() -> (ScriptedProvider, mpsc::Receiver<()>, mpsc::Sender<()>) {
    let (entered_tx, entered_rx) = mpsc::channel();
    let (release_tx, release_rx) = mpsc::channel::<()>();
    let entered_tx = Mutex::new(entered_tx);
    let release_rx = Mutex::new(release_rx);
    let first = AtomicBool::new(true);
    let provider = ScriptedProvider::new(move |req| {
        if first.swap(false, Ordering::SeqCst) {
            entered_tx.lock().unwrap().send(()).unwrap();
            release_rx.lock().unwrap().recv().unwrap();
        }
        Ok(demo::respond(req))
    });
    (provider, entered_rx, release_tx)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_post_to_the_same_session_is_rejected() {
    let (provider, entered, release) = gated_provider();
    let server = Arc::new(server(provider));
    let id = server.create().await;
    let other = server.create().await;

    let first = {
        let server = server.clone();
        let id = id.clone();
        tokio::spawn(async move { server.say(&id, "Hi there!").await })
    };
    tokio::task::spawn_blocking(move || entered.recv().unwrap()).await.unwrap();

    let second = server.say(&id, "Are you there?").await;
    assert_eq!(second.status, StatusCode::CONFLICT);
    assert!(second.json()["error"].as_str().unwrap().contains("in progress"));

    // Other sessions are not blocked by the in-flight turn.
    let parallel = server.say(&other, "Hi there!").await;
    assert_eq!(parallel.status, StatusCode::OK);

    release.send(()).unwrap();
    let first = first.await.unwrap();
    assert_eq!(first.status, StatusCode::OK);
    assert_eq!(kinds(&first.events()), ["state_change", "message", "done"]);

    let after = server.say(&id, "I'm Sam and I'm 34.").await;
    assert_eq!(after.status, StatusCode::OK, "the lock is released after the turn");
}

#[tokio::test]
async fn provider_outage_is_502_and_leaves_the_session_unchanged() {
    let server = server(ScriptedProvider::unavailable());
    let id = server.create().await;
    let before = server.get(&format!("/sessions/{id}")).await.body;
    let reply = server.say(&id, "Hi there!").await;
    assert_eq!(reply.status, StatusCode::BAD_GATEWAY);
    assert!(reply.json()["error"].is_string());
    assert_eq!(server.get(&format!("/sessions/{id}")).await.body, before);
    assert_eq!(server.get(&format!("/sessions/{id}/events")).await.json(), json!([]));
}

#[tokio::test]
async fn unknown_sessions_and_events_are_404() {
    let server = server(demo_provider());
    assert_eq!(server.get("/sessions/nope").await.status, StatusCode::NOT_FOUND);
    assert_eq!(server.get("/sessions/..%2Fetc").await.status, StatusCode::NOT_FOUND);
    assert_eq!(server.say("nope", "hi").await.status, StatusCode::NOT_FOUND);
    assert_eq!(server.get("/sessions/nope/events").await.status, StatusCode::NOT_FOUND);
    assert_eq!(server.get("/sessions/nope/events/viz-1/data").await.status, StatusCode::NOT_FOUND);
    let id = server.create().await;
    assert_eq!(server.get(&format!("/sessions/{id}/events/viz-1/data")).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_requests_are_400() {
    let server = server(demo_provider());
    let id = server.create().await;
    assert_eq!(server.say(&id, "   ").await.status, StatusCode::BAD_REQUEST);
    let reply = server.post_json("/sessions", json!({ "shared_sources": ["health.sleep"] })).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert!(reply.json()["error"].as_str().unwrap().contains("health.sleep"));
    let reply = server.post_json("/sessions", json!({ "colour": "blue" })).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
}

/// Step total and entry count for the week starting 2024-02-26, read
/// straight from the fixture file.
fn fixture_week_steps() -> (f64, usize) {
    let text = std::fs::read_to_string(support::fixture("steps.ndjson")).unwrap();
    let mut seen = std::collections::HashSet::new();
    let (mut total, mut entries) = (0.0, 0);
    for line in text.lines() {
        let Ok(value) = serde_json::from_str::<Value>(line) else { continue };
        if value["source"] != "health.stepcount" || value["unit"] != "steps" || !seen.insert(line.to_string()) {
            continue;
        }
        let start = value["start"].as_str().unwrap();
        if ("2024-02-26".."2024-03-04").contains(&&start[..10]) {
            total += value["value"].as_f64().unwrap();
            entries += 1;
        }
    }
    (total, entries)
}

#[tokio::test]
async fn visualization_data_carries_the_week_bucket() {
    let server = server(demo_provider());
    let id = server.create().await;
    let mut viz = None;
    for message in &DEMO_USER_MESSAGES[..7] {
        for event in server.say(&id, message).await.events() {
            if let EventKind::Visualization { event_id, .. } = event.kind {
                viz = Some(event_id);
            }
        }
    }
    let viz = viz.expect("the advice turn produces a chart");
    let reply = server.get(&format!("/sessions/{id}/events/{viz}/data")).await;
    assert_eq!(reply.status, StatusCode::OK);
    let data = reply.json();
    assert_eq!(data["id"], viz.as_str());
    assert_eq!(data["source"], "health.stepcount");
    assert_eq!(data["unit"], "steps");
    assert_eq!(data["granularity"], "week");
    assert_eq!(data["payload"]["kind"], "buckets");
    let buckets = data["payload"]["buckets"].as_array().unwrap();
    assert_eq!(buckets.len(), 1);
    let (total, entries) = fixture_week_steps();
    assert_eq!(buckets[0]["value"].as_f64().unwrap(), total);
    assert_eq!(buckets[0]["entries"].as_u64().unwrap() as usize, entries);
}

fn tool_ran_this_turn(req: &CompletionRequest) -> bool {
    req.messages.iter().rev().take_while(|m| m.role != Role::User).any(|m| m.role == Role::Tool)
}

/// Calls tool `call` with `args` on the first generation of every turn.
fn charting_provider(call: &'static str, args: Value) -> ScriptedProvider {
    ScriptedProvider::new(move |req| {
        Ok(match Stage::detect(req) {
            Some(Stage::StateClassify) => ProviderResponse::text("continue"),
            Some(Stage::StrategyPredict) => ProviderResponse::text("Giving Information"),
            Some(Stage::ResponseGenerate) if !tool_ran_this_turn(req) && req.tools.is_some() => {
                ProviderResponse::tool_call("call_1", call, args.to_string())
            }
            _ => ProviderResponse::text("Here is what your data shows."),
        })
    })
}

#[tokio::test]
async fn workout_chart_rows_match_the_fixture_workouts() {
    let args = json!({ "data_source_name": "health.workout", "date": "2024-02-01", "granularity": "month" });
    let server = server(charting_provider("visualize", args));
    let id = server.create().await;
    let events = server.say(&id, "How did my February go?").await.events();
    assert_eq!(kinds(&events), ["visualization", "message", "done"]);

    let data = server.get(&format!("/sessions/{id}/events/viz-1/data")).await.json();
    assert_eq!(data["payload"]["kind"], "workouts");

    let text = std::fs::read_to_string(support::fixture("steps.ndjson")).unwrap();
    let mut expected: BTreeMap<String, (u64, f64)> = BTreeMap::new();
    for line in text.lines() {
        let Ok(value) = serde_json::from_str::<Value>(line) else { continue };
        if value["source"] != "health.workout" || !value["start"].as_str().unwrap().starts_with("2024-02") {
            continue;
        }
        let start = chrono::DateTime::parse_from_rfc3339(value["start"].as_str().unwrap()).unwrap();
        let end = chrono::DateTime::parse_from_rfc3339(value["end"].as_str().unwrap()).unwrap();
        let row = expected.entry(value["workout_type"].as_str().unwrap().to_string()).or_default();
        row.0 += 1;
        row.1 += (end - start).num_seconds() as f64 / 60.0;
    }
    let rows = data["payload"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), expected.len());
    for row in rows {
        let (count, minutes) = expected[row["workout_type"].as_str().unwrap()];
        assert_eq!(row["count"].as_u64().unwrap(), count);
        assert_eq!(row["total_minutes"].as_f64().unwrap(), minutes);
    }
}

#[tokio::test]
async fn unshared_sources_are_refused_to_the_model() {
    let args = json!({
        "data_source_name": "health.stepcount",
        "start": "2024-03-01 00:00:00",
        "end": "2024-03-01 23:59:59",
        "granularity": "day",
    });
    let server = server(charting_provider("describe", args));
    let reply = server.post_json("/sessions", json!({ "shared_sources": ["health.workout"] })).await;
    assert_eq!(reply.status, StatusCode::CREATED);
    let id = reply.json()["id"].as_str().unwrap().to_string();
    let reply = server.say(&id, "How many steps today?").await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.body);
    let session = server.get(&format!("/sessions/{id}")).await.json();
    let tool = session["history"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["role"] == "tool")
        .unwrap();
    assert_eq!(tool["content"], "error: source not shared: health.stepcount");
}

#[tokio::test]
async fn import_reports_counts() {
    let server = server(demo_provider());
    let body = std::fs::read_to_string(support::fixture("steps.ndjson")).unwrap();
    let reply = server
        .call(Request::post("/data/import").body(Body::from(body.clone())).unwrap())
        .await;
    assert_eq!(reply.status, StatusCode::OK);
    let report = reply.json();
    // The store already holds the fixture, so everything valid is a duplicate.
    assert_eq!(report["accepted"], 0);
    assert_eq!(report["duplicates"], 55);
    assert_eq!(report["rejected"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn sources_list_the_catalog() {
    let server = server(demo_provider());
    let sources = server.get("/sources").await.json();
    let names: Vec<&str> = sources.as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"health.stepcount") && names.contains(&"health.workout"));
}

#[tokio::test]
async fn bearer_token_is_enforced() {
    let server = server_with(demo_provider(), Some("s3cret"));
    assert_eq!(server.get("/health").await.status, StatusCode::OK);
    let denied = server.call(Request::post("/sessions").body(Body::empty()).unwrap()).await;
    assert_eq!(denied.status, StatusCode::UNAUTHORIZED);
    let wrong = Request::post("/sessions")
        .header(header::AUTHORIZATION, "Bearer nope")
        .body(Body::empty())
        .unwrap();
    assert_eq!(server.call(wrong).await.status, StatusCode::UNAUTHORIZED);
    let allowed = Request::post("/sessions")
        .header(header::AUTHORIZATION, "Bearer s3cret")
        .body(Body::empty())
        .unwrap();
    assert_eq!(server.call(allowed).await.status, StatusCode::CREATED);
}
