use std::path::PathBuf;
use std::sync::Arc;

use chrono::NaiveDate;
use coach_core::demo;
use coach_core::{CoachConfig, DialogueStateId, Stage};
use coach_eval::coding::utterance_of;
use coach_eval::counterfactual::baseline_request;
use coach_eval::{
    load_seed_dir, Agent, CodeSet, Coder, Consistency, CounterfactualConfig, CounterfactualRun, ExternalMICode,
    Harness, SeedHistory, BARRIER_PERSONAS,
};
use coach_healthdata::{HealthStore, StoreConfig};
use coach_llm::{GatewayError, ProviderResponse, Role, ScriptedProvider};
use ExternalMICode::*;

const BASELINE_REPLY: &str = "You should start with short walks. Try to stay positive.";
const FULL_REPLY: &str = "What kinds of physical activity have you done in the past, and for how long?";

fn seeds() -> Vec<SeedHistory> {
    load_seed_dir(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/seeds")).unwrap()
}

fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, 1).unwrap()
}

/// Chain stages get the demo model; the bare system-prompt request gets a
/// fixed piece of unsolicited advice.
fn coach() -> ScriptedProvider {
    ScriptedProvider::new(|req| match Stage::detect(req) {
        Some(_) => Ok(demo::respond(req)),
        None => Ok(ProviderResponse::text(BASELINE_REPLY)),
    })
}

fn coder() -> ScriptedProvider {
    ScriptedProvider::new(|req| {
        let answer = match utterance_of(req).unwrap_or("") {
            FULL_REPLY => "[Open Question]",
            "You should start with short walks." => "[Advise Without Permission, Giving Information]",
            "Try to stay positive." => "[Direct]",
            _ => "unknown",
        };
        Ok(ProviderResponse::text(answer))
    })
}

fn run(coach: ScriptedProvider, coder: &ScriptedProvider, seeds: &[SeedHistory], workers: usize) -> CounterfactualRun {
    let config = CounterfactualConfig {
        coach: CoachConfig::default(),
        today: today(),
        repeats: 1,
        workers,
    };
    let harness = Harness::new(
        Arc::new(coach),
        Arc::new(HealthStore::in_memory(StoreConfig::default())),
        Coder::new(coder, Default::default()),
        config,
    );
    harness
        .run(seeds, &BARRIER_PERSONAS, &[Agent::Full, Agent::Baseline])
        .unwrap()
}

#[test]
fn fixture_seeds_are_valid_program_openings() {
    let seeds = seeds();
    assert_eq!(seeds.len(), 16);
    for seed in &seeds {
        assert_eq!(seed.state, DialogueStateId::Program);
        assert_eq!(seed.messages.last().unwrap().role, Role::Assistant);
        assert!(seed.messages.last().unwrap().content.contains("questions or concerns"));
    }
}

#[test]
fn full_grid_has_160_cells_per_agent_with_hand_computed_shares() {
    let coder = coder();
    let result = run(coach(), &coder, &seeds(), 8);
    assert_eq!(result.cells.len(), 320);

    let full = result.summary(Agent::Full).unwrap();
    let base = result.summary(Agent::Baseline).unwrap();
    assert_eq!((full.cells, full.completed, full.failed), (160, 160, 0));
    assert_eq!((base.cells, base.completed, base.failed), (160, 160, 0));

    // Every full reply is one open question.
    assert_eq!(full.codes.total_codes, 160);
    assert_eq!(full.codes.consistency_share(Consistency::Consistent), 1.0);
    assert_eq!(full.codes.code(OpenQuestion).unwrap().containment, 1.0);
    assert_eq!(full.codes.code(AdviseWithoutPermission).unwrap().containment, 0.0);
    assert_eq!(full.codes.mean_codes_per_response, 1.0);

    // Every baseline reply: advice without permission + information + direct.
    assert_eq!(base.codes.total_codes, 480);
    assert_eq!(base.codes.consistency_share(Consistency::Inconsistent), 320.0 / 480.0);
    assert_eq!(base.codes.consistency_share(Consistency::Neutral), 160.0 / 480.0);
    assert_eq!(base.codes.consistency_share(Consistency::Consistent), 0.0);
    assert_eq!(base.codes.code(AdviseWithoutPermission).unwrap().containment, 1.0);
    assert_eq!(base.codes.code(OpenQuestion).unwrap().containment, 0.0);
    assert_eq!(base.codes.mean_codes_per_response, 3.0);

    let cell = &result.cells[1];
    assert_eq!(cell.agent, Agent::Baseline);
    assert_eq!(cell.history_id, "seed-01");
    assert_eq!(cell.persona, BARRIER_PERSONAS[0].name);
    assert_eq!(
        cell.coding.as_ref().unwrap().merged,
        CodeSet::from([AdviseWithoutPermission, GivingInformation, Direct])
    );
}

#[test]
fn one_by_one_is_one_cell_per_agent() {
    let coder = coder();
    let config = CounterfactualConfig {
        coach: CoachConfig::default(),
        today: today(),
        repeats: 1,
        workers: 2,
    };
    let harness = Harness::new(
        Arc::new(coach()),
        Arc::new(HealthStore::in_memory(StoreConfig::default())),
        Coder::new(&coder, Default::default()),
        config,
    );
    let result = harness.run(&seeds()[..1], &BARRIER_PERSONAS[..1], &[Agent::Baseline]).unwrap();
    assert_eq!(result.cells.len(), 1);
    assert_eq!(result.summaries.len(), 1);
}

#[test]
fn repeats_multiply_cells() {
    let coder = coder();
    let config = CounterfactualConfig {
        coach: CoachConfig::default(),
        today: today(),
        repeats: 3,
        workers: 4,
    };
    let harness = Harness::new(
        Arc::new(coach()),
        Arc::new(HealthStore::in_memory(StoreConfig::default())),
        Coder::new(&coder, Default::default()),
        config,
    );
    let result = harness
        .run(&seeds()[..2], &BARRIER_PERSONAS[..2], &[Agent::Full, Agent::Baseline])
        .unwrap();
    assert_eq!(result.cells.len(), 2 * 2 * 2 * 3);
    assert_eq!(result.cells.iter().map(|c| c.repeat).max(), Some(2));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let seeds = seeds();
    let coder = coder();
    let serial = run(coach(), &coder, &seeds[..3], 1);
    let parallel = run(coach(), &coder, &seeds[..3], 7);
    assert_eq!(serial, parallel);
}

#[test]
fn failed_cells_are_disclosed_and_excluded() {
    let weather = BARRIER_PERSONAS[9].message;
    let flaky = ScriptedProvider::new(move |req| {
        let last = req.messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str());
        match Stage::detect(req) {
            Some(_) => Ok(demo::respond(req)),
            None if last == Some(weather) => Err(GatewayError::Transport {
                attempts: 3,
                message: "timeout".into(),
            }),
            None => Ok(ProviderResponse::text(BASELINE_REPLY)),
        }
    });
    let coder = coder();
    let result = run(flaky, &coder, &seeds()[..4], 3);
    let base = result.summary(Agent::Baseline).unwrap();
    assert_eq!((base.cells, base.completed, base.failed), (40, 36, 4));
    assert_eq!(base.codes.responses, 36);
    assert_eq!(base.codes.code(AdviseWithoutPermission).unwrap().containment, 1.0);
    let failed: Vec<_> = result.cells.iter().filter(|c| !c.completed()).collect();
    assert_eq!(failed.len(), 4);
    assert!(failed.iter().all(|c| c.error.as_deref().unwrap().starts_with("response failed")));
}

#[test]
fn baseline_sees_only_the_system_prompt_history_and_persona() {
    let seed = &seeds()[0];
    let req = baseline_request(seed, BARRIER_PERSONAS[3].message, today(), &Default::default());
    assert_eq!(req.messages.len(), 7);
    let system = req.system_prompt();
    assert!(system.starts_with("Act as if you're a professional health coach."));
    assert!(system.contains("Today's date is 2024-03-01 Friday."));
    assert!(!system.contains("{DATE_STRING}"));
    assert_eq!(&req.messages[1..6], seed.messages.as_slice());
    assert_eq!(req.messages[6].content, BARRIER_PERSONAS[3].message);
    assert!(req.tools.is_none());
    assert_eq!(Stage::detect(&req), None);
}

#[test]
fn invalid_seeds_are_rejected() {
    let mut seed = seeds()[0].clone();
    seed.messages.pop();
    assert!(seed.validate().is_err());
    let mut seed = seeds()[0].clone();
    seed.messages.swap(0, 1);
    assert!(seed.validate().is_err());
}

#[test]
fn persona_catalog_is_ten_barriers() {
    assert_eq!(BARRIER_PERSONAS.len(), 10);
    assert_eq!(BARRIER_PERSONAS[1].message, "On most days, it's hard for me to find the motivation to exercise.");
    let names: std::collections::BTreeSet<_> = BARRIER_PERSONAS.iter().map(|p| p.name).collect();
    assert_eq!(names.len(), 10);
}
