//! Aggregates over annotated transcripts.
//!
//! Shares are plain ratios of counts; a share with an empty denominator is 0,
//! so empty input yields all-zero metrics. Agent messages are the visible
//! coach replies. Lengths are counted in characters of visible content.

use std::collections::BTreeMap;

use coach_core::{DialogueStateId, InternalStrategy};
use serde::{Deserialize, Serialize};

use crate::codes::{classify_consistency, Consistency, ExternalMICode};
use crate::coding::CodeSet;
use crate::transcript::{AnnotatedTranscript, EntryKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency<K> {
    pub key: K,
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnCounts<K: Ord> {
    pub turn_index: usize,
    pub counts: BTreeMap<K, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub state: DialogueStateId,
    pub agent_messages: usize,
    /// Share of all agent messages sent in this state.
    pub share: f64,
    /// Agent messages in this state per transcript.
    pub mean_agent_messages: f64,
    pub tool_calls: usize,
    /// Share of all tool calls made in this state.
    pub tool_call_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnLength {
    pub turn_index: usize,
    pub agent_mean_chars: f64,
    pub user_mean_chars: f64,
    /// Transcripts with a reply in this turn.
    pub agent_samples: usize,
    /// Transcripts with a user message in this turn.
    pub user_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFrequency {
    pub code: ExternalMICode,
    pub consistency: Consistency,
    /// Responses containing the code (a response counts a code once).
    pub occurrences: usize,
    /// Share of all code occurrences.
    pub share: f64,
    /// Share of coded responses that contain the code.
    pub containment: f64,
}

/// External-code aggregates over a set of coded responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSummary {
    pub responses: usize,
    pub total_codes: usize,
    pub codes: Vec<CodeFrequency>,
    pub consistency: Vec<Frequency<Consistency>>,
    pub mean_codes_per_response: f64,
}

impl CodeSummary {
    pub fn code(&self, code: ExternalMICode) -> Option<&CodeFrequency> {
        self.codes.iter().find(|c| c.code == code)
    }

    pub fn consistency_share(&self, class: Consistency) -> f64 {
        self.consistency.iter().find(|f| f.key == class).map_or(0.0, |f| f.share)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMetrics {
    pub transcripts: usize,
    pub agent_messages: usize,
    pub user_messages: usize,
    pub tool_calls: usize,
    /// One row per dialogue state, in program order.
    pub states: Vec<StateMetrics>,
    /// Transcripts in each state at each turn (state of the turn's last reply).
    pub state_progression: Vec<TurnCounts<DialogueStateId>>,
    pub turn_lengths: Vec<TurnLength>,
    pub strategies: Vec<Frequency<InternalStrategy>>,
    pub strategies_by_turn: Vec<TurnCounts<InternalStrategy>>,
    pub external: CodeSummary,
    pub codes_by_turn: Vec<TurnCounts<ExternalMICode>>,
    pub consistency_by_turn: Vec<TurnCounts<Consistency>>,
    /// Replies without a coding (never coded or coder failure).
    pub uncoded_responses: usize,
}

impl TranscriptMetrics {
    pub fn state(&self, state: DialogueStateId) -> &StateMetrics {
        &self.states[state.index()]
    }

    pub fn strategy_share(&self, strategy: InternalStrategy) -> f64 {
        self.strategies.iter().find(|f| f.key == strategy).map_or(0.0, |f| f.share)
    }
}

pub fn share(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

fn frequencies<K: Copy + Ord>(keys: &[K], counts: &BTreeMap<K, usize>) -> Vec<Frequency<K>> {
    let total: usize = counts.values().sum();
    keys.iter()
        .map(|&key| {
            let count = counts.get(&key).copied().unwrap_or(0);
            Frequency {
                key,
                count,
                share: share(count, total),
            }
        })
        .collect()
}

fn bump<K: Ord>(map: &mut BTreeMap<K, usize>, key: K) {
    *map.entry(key).or_insert(0) += 1;
}

fn by_turn<K: Ord>(map: BTreeMap<usize, BTreeMap<K, usize>>) -> Vec<TurnCounts<K>> {
    map.into_iter()
        .map(|(turn_index, counts)| TurnCounts { turn_index, counts })
        .collect()
}

/// Aggregates the codes of coded responses. `Unknown` never counts.
pub fn summarize_codes<'a>(responses: impl IntoIterator<Item = &'a CodeSet>) -> CodeSummary {
    let mut per_code: BTreeMap<ExternalMICode, usize> = BTreeMap::new();
    let mut per_class: BTreeMap<Consistency, usize> = BTreeMap::new();
    let mut count = 0;
    for codes in responses {
        count += 1;
        for &code in codes {
            if let Some(class) = classify_consistency(code) {
                bump(&mut per_code, code);
                bump(&mut per_class, class);
            }
        }
    }
    let total: usize = per_code.values().sum();
    let codes = ExternalMICode::ALL
        .iter()
        .map(|&code| {
            let occurrences = per_code.get(&code).copied().unwrap_or(0);
            CodeFrequency {
                code,
                consistency: classify_consistency(code).expect("catalog codes are classified"),
                occurrences,
                share: share(occurrences, total),
                containment: share(occurrences, count),
            }
        })
        .collect();
    CodeSummary {
        responses: count,
        total_codes: total,
        codes,
        consistency: frequencies(&Consistency::ALL, &per_class),
        mean_codes_per_response: if count == 0 { 0.0 } else { total as f64 / count as f64 },
    }
}

pub fn transcript_metrics(transcripts: &[AnnotatedTranscript]) -> TranscriptMetrics {
    let mut state_msgs: BTreeMap<DialogueStateId, usize> = BTreeMap::new();
    let mut state_tools: BTreeMap<DialogueStateId, usize> = BTreeMap::new();
    let mut strategy_counts: BTreeMap<InternalStrategy, usize> = BTreeMap::new();
    let mut progression: BTreeMap<usize, BTreeMap<DialogueStateId, usize>> = BTreeMap::new();
    let mut strategies_by_turn: BTreeMap<usize, BTreeMap<InternalStrategy, usize>> = BTreeMap::new();
    let mut codes_by_turn: BTreeMap<usize, BTreeMap<ExternalMICode, usize>> = BTreeMap::new();
    let mut consistency_by_turn: BTreeMap<usize, BTreeMap<Consistency, usize>> = BTreeMap::new();
    // turn -> (agent char sum, agent samples, user char sum, user samples)
    let mut lengths: BTreeMap<usize, (usize, usize, usize, usize)> = BTreeMap::new();
    let mut coded: Vec<&CodeSet> = Vec::new();
    let (mut agent_messages, mut user_messages, mut tool_calls, mut uncoded) = (0, 0, 0, 0);

    for transcript in transcripts {
        let mut agent_chars: BTreeMap<usize, usize> = BTreeMap::new();
        let mut user_chars: BTreeMap<usize, usize> = BTreeMap::new();
        let mut last_state: BTreeMap<usize, DialogueStateId> = BTreeMap::new();
        for entry in &transcript.entries {
            let turn = entry.turn_index;
            match entry.kind {
                EntryKind::User => {
                    user_messages += 1;
                    *user_chars.entry(turn).or_insert(0) += entry.content.chars().count();
                }
                EntryKind::Reply => {
                    agent_messages += 1;
                    bump(&mut state_msgs, entry.state);
                    last_state.insert(turn, entry.state);
                    *agent_chars.entry(turn).or_insert(0) += entry.content.chars().count();
                    if let Some(strategy) = entry.strategy {
                        bump(&mut strategy_counts, strategy);
                        bump(strategies_by_turn.entry(turn).or_default(), strategy);
                    }
                    match &entry.coding {
                        Some(coding) => {
                            coded.push(&coding.merged);
                            for code in coding.known_codes() {
                                bump(codes_by_turn.entry(turn).or_default(), code);
                                if let Some(class) = classify_consistency(code) {
                                    bump(consistency_by_turn.entry(turn).or_default(), class);
                                }
                            }
                        }
                        None => uncoded += 1,
                    }
                }
                EntryKind::ToolCall => {
                    tool_calls += entry.tool_calls;
                    *state_tools.entry(entry.state).or_insert(0) += entry.tool_calls;
                }
                EntryKind::ToolResult => {}
            }
        }
        for (turn, state) in last_state {
            bump(progression.entry(turn).or_default(), state);
        }
        for (turn, chars) in agent_chars {
            let slot = lengths.entry(turn).or_default();
            slot.0 += chars;
            slot.1 += 1;
        }
        for (turn, chars) in user_chars {
            let slot = lengths.entry(turn).or_default();
            slot.2 += chars;
            slot.3 += 1;
        }
    }

    let states = DialogueStateId::ALL
        .iter()
        .map(|&state| {
            let msgs = state_msgs.get(&state).copied().unwrap_or(0);
            let tools = state_tools.get(&state).copied().unwrap_or(0);
            StateMetrics {
                state,
                agent_messages: msgs,
                share: share(msgs, agent_messages),
                mean_agent_messages: if transcripts.is_empty() {
                    0.0
                } else {
                    msgs as f64 / transcripts.len() as f64
                },
                tool_calls: tools,
                tool_call_share: share(tools, tool_calls),
            }
        })
        .collect();

    let mean = |sum: usize, n: usize| if n == 0 { 0.0 } else { sum as f64 / n as f64 };
    let turn_lengths = lengths
        .into_iter()
        .map(|(turn_index, (a, an, u, un))| TurnLength {
            turn_index,
            agent_mean_chars: mean(a, an),
            user_mean_chars: mean(u, un),
            agent_samples: an,
            user_samples: un,
        })
        .collect();

    TranscriptMetrics {
        transcripts: transcripts.len(),
        agent_messages,
        user_messages,
        tool_calls,
        states,
        state_progression: by_turn(progression),
        turn_lengths,
        strategies: frequencies(&InternalStrategy::ALL, &strategy_counts),
        strategies_by_turn: by_turn(strategies_by_turn),
        external: summarize_codes(coded),
        codes_by_turn: by_turn(codes_by_turn),
        consistency_by_turn: by_turn(consistency_by_turn),
        uncoded_responses: uncoded,
    }
}
