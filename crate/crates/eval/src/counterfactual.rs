//! Counterfactual ablation: the full coaching pipeline against a baseline
//! that sees only the coach system prompt.
//!
//! Every seed history (the opening five messages of a real conversation,
//! ending with the coach asking for questions or concerns) is extended with
//! each barrier persona's message. Both agents answer every extended history
//! and every answer is coded with the external MI codes.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::NaiveDate;
use coach_core::prompts::{self, fill, DATE_SLOT};
use coach_core::{date_string, CoachConfig, DialogueStateId, HistoryEntry, ModelSettings, Orchestrator, Session};
use coach_healthdata::HealthStore;
use coach_llm::{complete, ChatMessage, CompletionRequest, Provider, Role};
use serde::{Deserialize, Serialize};

use crate::codes::ExternalMICode;
use crate::coding::{CodedUtterance, Coder};
use crate::error::{EvalError, Result};
use crate::metrics::{summarize_codes, CodeSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BarrierPersona {
    pub name: &'static str,
    pub message: &'static str,
}

pub const BARRIER_PERSONAS: [BarrierPersona; 10] = [
    BarrierPersona {
        name: "Feeling discomfort",
        message: "I haven't exercised in a while and I'm worried about being sore and feeling pain from not having exercised in a long time.",
    },
    BarrierPersona {
        name: "Feeling unmotivated",
        message: "On most days, it's hard for me to find the motivation to exercise.",
    },
    BarrierPersona {
        name: "No energy",
        message: "I feel too tired to exercise when I get back from work. I just don't have the energy to exercise.",
    },
    BarrierPersona {
        name: "No time",
        message: "I just feel like I don't have time to exercise. Between work and my family responsibilities, I'm always so busy.",
    },
    BarrierPersona {
        name: "Feeling sick",
        message: "I had been sick for the last few weeks and that has thrown me off track. Now it feels hard to get back into my routine.",
    },
    BarrierPersona {
        name: "Feeling stressed",
        message: "I've been feeling quite stressed lately and that's been preventing me from getting exercise.",
    },
    BarrierPersona {
        name: "Feeling ashamed",
        message: "I’ve never really exercised before and I worry about what others might think of me. I feel ashamed.",
    },
    BarrierPersona {
        name: "Feeling unsafe",
        message: "I don’t feel safe going for a workout outside in my neighborhood, which makes it hard to stay active.",
    },
    BarrierPersona {
        name: "Feeling unsupported or alone",
        message: "I don't have anyone I can exercise with together. I feel like I’m doing this alone.",
    },
    BarrierPersona {
        name: "Weather",
        message: "It's difficult to get exercise because it's really cold and dark outside this time of year.",
    },
];

/// Number of visible messages in a seed history.
pub const SEED_MESSAGES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedHistory {
    pub id: String,
    /// Dialogue state the conversation is in after the seed messages.
    pub state: DialogueStateId,
    pub messages: Vec<ChatMessage>,
}

impl SeedHistory {
    /// Five plain messages alternating coach/client, starting and ending with
    /// the coach.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(EvalError::InvalidSeed {
                id: self.id.clone(),
                reason,
            })
        };
        if self.messages.len() != SEED_MESSAGES {
            return fail(format!("expected {SEED_MESSAGES} messages, found {}", self.messages.len()));
        }
        for (i, message) in self.messages.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::Assistant } else { Role::User };
            if message.role != expected || message.has_tool_calls() {
                return fail(format!("message {i} must be a plain {expected} message"));
            }
            if message.content.trim().is_empty() {
                return fail(format!("message {i} is empty"));
            }
        }
        Ok(())
    }

    /// The seed as a session in the seed's state.
    pub fn to_session(&self, id: impl Into<String>) -> Session {
        let mut session = Session::new(id);
        session.state = self.state;
        // The opening coach message shares turn 0 with the first client message.
        let mut users: usize = 0;
        for message in &self.messages {
            let turn_index = if message.role == Role::User {
                users += 1;
                users - 1
            } else {
                users.saturating_sub(1)
            };
            session.history.push(HistoryEntry {
                state: self.state,
                turn_index,
                message: message.clone(),
            });
        }
        session
    }
}

/// Loads every `*.json` seed in `dir`, sorted by file name, validating each.
pub fn load_seed_dir(dir: &Path) -> Result<Vec<SeedHistory>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .iter()
        .map(|path| {
            let seed: SeedHistory = serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| EvalError::Input {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            seed.validate()?;
            Ok(seed)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    /// Every prompt chain, as in a live session.
    Full,
    /// One completion from the coach system prompt alone.
    Baseline,
}

impl Agent {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Agent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Self::Full),
            "baseline" => Ok(Self::Baseline),
            other => Err(format!("unknown agent '{other}' (expected full or baseline)")),
        }
    }
}

/// The baseline request: system prompt, seed history, persona message.
pub fn baseline_request(seed: &SeedHistory, persona: &str, today: NaiveDate, model: &ModelSettings) -> CompletionRequest {
    let system = fill(prompts::SYSTEM.text(), DATE_SLOT, &date_string(today));
    let mut messages = Vec::with_capacity(seed.messages.len() + 2);
    messages.push(ChatMessage::system(system));
    messages.extend(seed.messages.iter().cloned());
    messages.push(ChatMessage::user(persona));
    CompletionRequest {
        model_id: model.model_id.clone(),
        temperature: model.temperature,
        messages,
        tools: None,
        forced_tool: None,
    }
}

#[derive(Debug, Clone)]
pub struct CounterfactualConfig {
    pub coach: CoachConfig,
    pub today: NaiveDate,
    /// Samples per cell.
    pub repeats: usize,
    /// Worker threads.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub history_id: String,
    pub persona: String,
    pub agent: Agent,
    pub repeat: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coding: Option<CodedUtterance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Cell {
    pub fn completed(&self) -> bool {
        self.coding.is_some()
    }

    pub fn contains(&self, code: ExternalMICode) -> bool {
        self.coding.as_ref().is_some_and(|c| c.merged.contains(&code))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: Agent,
    pub cells: usize,
    pub completed: usize,
    pub failed: usize,
    /// Aggregates over completed cells only.
    pub codes: CodeSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualRun {
    pub cells: Vec<Cell>,
    pub summaries: Vec<AgentSummary>,
}

impl CounterfactualRun {
    pub fn summary(&self, agent: Agent) -> Option<&AgentSummary> {
        self.summaries.iter().find(|s| s.agent == agent)
    }
}

pub fn summarize_cells(cells: &[Cell], agents: &[Agent]) -> Vec<AgentSummary> {
    agents
        .iter()
        .map(|&agent| {
            let mine: Vec<&Cell> = cells.iter().filter(|c| c.agent == agent).collect();
            let coded: Vec<_> = mine.iter().filter_map(|c| c.coding.as_ref().map(|c| &c.merged)).collect();
            AgentSummary {
                agent,
                cells: mine.len(),
                completed: coded.len(),
                failed: mine.len() - coded.len(),
                codes: summarize_codes(coded),
            }
        })
        .collect()
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

struct Job<'a> {
    seed: &'a SeedHistory,
    persona: &'a BarrierPersona,
    agent: Agent,
    repeat: usize,
}

pub struct Harness<'a> {
    pub orchestrator: Orchestrator,
    pub coder: Coder<'a>,
    pub config: CounterfactualConfig,
}

impl<'a> Harness<'a> {
    pub fn new(
        coach: Arc<dyn Provider>,
        store: Arc<HealthStore>,
        coder: Coder<'a>,
        mut config: CounterfactualConfig,
    ) -> Self {
        config.coach.today = Some(config.today);
        let orchestrator = Orchestrator::new(coach, store, config.coach.clone());
        Self {
            orchestrator,
            coder,
            config,
        }
    }

    fn respond(&self, job: &Job<'_>) -> std::result::Result<String, String> {
        match job.agent {
            Agent::Full => {
                let id = format!("{}-{}-{}", job.seed.id, slug(job.persona.name), job.repeat);
                let mut session = job.seed.to_session(id);
                let output = self
                    .orchestrator
                    .handle_user_message(&mut session, job.persona.message)
                    .map_err(|e| e.to_string())?;
                Ok(output.messages().collect::<Vec<_>>().join("\n\n"))
            }
            Agent::Baseline => {
                let request =
                    baseline_request(job.seed, job.persona.message, self.config.today, &self.config.coach.model);
                complete(self.orchestrator.provider().as_ref(), &request)
                    .map(|m| m.content)
                    .map_err(|e| e.to_string())
            }
        }
    }

    fn run_job(&self, job: &Job<'_>) -> Cell {
        let mut cell = Cell {
            history_id: job.seed.id.clone(),
            persona: job.persona.name.to_string(),
            agent: job.agent,
            repeat: job.repeat,
            response: None,
            coding: None,
            error: None,
        };
        match self.respond(job) {
            Ok(response) => {
                match self.coder.code_utterance(&response) {
                    Ok(coding) => cell.coding = Some(coding),
                    Err(e) => cell.error = Some(format!("coding failed: {e}")),
                }
                cell.response = Some(response);
            }
            Err(e) => cell.error = Some(format!("response failed: {e}")),
        }
        if let Some(error) = &cell.error {
            tracing::warn!(history = %cell.history_id, persona = %cell.persona, agent = %cell.agent, %error, "cell failed");
        }
        cell
    }

    /// Runs every (history, persona, agent, repeat) cell. Cells come back in
    /// that nesting order regardless of scheduling.
    pub fn run(
        &self,
        seeds: &[SeedHistory],
        personas: &[BarrierPersona],
        agents: &[Agent],
    ) -> Result<CounterfactualRun> {
        for seed in seeds {
            seed.validate()?;
        }
        let mut jobs = Vec::new();
        for seed in seeds {
            for persona in personas {
                for &agent in agents {
                    for repeat in 0..self.config.repeats {
                        jobs.push(Job {
                            seed,
                            persona,
                            agent,
                            repeat,
                        });
                    }
                }
            }
        }

        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Cell>>> = Mutex::new(vec![None; jobs.len()]);
        let workers = self.config.workers.clamp(1, jobs.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::Relaxed);
                    let Some(job) = jobs.get(index) else { break };
                    let cell = self.run_job(job);
                    results.lock().expect("results poisoned")[index] = Some(cell);
                });
            }
        });

        let cells: Vec<Cell> = results
            .into_inner()
            .expect("results poisoned")
            .into_iter()
            .map(|c| c.expect("every job ran"))
            .collect();
        let summaries = summarize_cells(&cells, agents);
        Ok(CounterfactualRun { cells, summaries })
    }
}
