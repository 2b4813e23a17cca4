//! Brute-force recount of transcript metrics, written without the library's
//! aggregation helpers: every number is recomputed by filtering the raw
//! entries for exactly the thing being counted.

#![allow(dead_code)]

use coach_core::{DialogueStateId, InternalStrategy};
use coach_eval::{classify_consistency, AnnotatedTranscript, Consistency, EntryKind, ExternalMICode, TranscriptMetrics};

pub const TOLERANCE: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn replies(corpus: &[AnnotatedTranscript]) -> Vec<&coach_eval::TranscriptEntry> {
    corpus
        .iter()
        .flat_map(|t| t.entries.iter())
        .filter(|e| e.kind == EntryKind::Reply)
        .collect()
}

struct Checker(Vec<String>);

impl Checker {
    fn num(&mut self, what: String, got: f64, want: f64) {
        if !close(got, want) {
            self.0.push(format!("{what}: got {got}, recount {want}"));
        }
    }

    fn int(&mut self, what: String, got: usize, want: usize) {
        if got != want {
            self.0.push(format!("{what}: got {got}, recount {want}"));
        }
    }
}

/// Every disagreement between `metrics` and a recount over `corpus`.
pub fn mismatches(metrics: &TranscriptMetrics, corpus: &[AnnotatedTranscript]) -> Vec<String> {
    let mut c = Checker(Vec::new());
    let all_replies = replies(corpus);
    let n_replies = all_replies.len();
    let n_users = corpus
        .iter()
        .flat_map(|t| t.entries.iter())
        .filter(|e| e.kind == EntryKind::User)
        .count();
    let tool_entries: Vec<_> = corpus
        .iter()
        .flat_map(|t| t.entries.iter())
        .filter(|e| e.kind == EntryKind::ToolCall)
        .collect();
    let n_tools: usize = tool_entries.iter().map(|e| e.tool_calls).sum();

    c.int("transcripts".into(), metrics.transcripts, corpus.len());
    c.int("agent messages".into(), metrics.agent_messages, n_replies);
    c.int("user messages".into(), metrics.user_messages, n_users);
    c.int("tool calls".into(), metrics.tool_calls, n_tools);

    for state in DialogueStateId::ALL {
        let row = metrics.states.iter().find(|r| r.state == state).expect("state row");
        let n = all_replies.iter().filter(|e| e.state == state).count();
        let tools: usize = tool_entries.iter().filter(|e| e.state == state).map(|e| e.tool_calls).sum();
        c.int(format!("{state} messages"), row.agent_messages, n);
        c.num(format!("{state} share"), row.share, ratio(n, n_replies));
        c.num(format!("{state} mean"), row.mean_agent_messages, ratio(n, corpus.len()));
        c.int(format!("{state} tool calls"), row.tool_calls, tools);
        c.num(format!("{state} tool share"), row.tool_call_share, ratio(tools, n_tools));
    }

    let with_strategy = all_replies.iter().filter(|e| e.strategy.is_some()).count();
    for strategy in InternalStrategy::ALL {
        let row = metrics.strategies.iter().find(|r| r.key == strategy).expect("strategy row");
        let n = all_replies.iter().filter(|e| e.strategy == Some(strategy)).count();
        c.int(format!("{strategy} count"), row.count, n);
        c.num(format!("{strategy} share"), row.share, ratio(n, with_strategy));
    }

    let coded: Vec<_> = all_replies.iter().filter_map(|e| e.coding.as_ref()).collect();
    let known = |code: &&ExternalMICode| **code != ExternalMICode::Unknown;
    let total_codes: usize = coded.iter().map(|u| u.merged.iter().filter(known).count()).sum();
    c.int("coded responses".into(), metrics.external.responses, coded.len());
    c.int("uncoded responses".into(), metrics.uncoded_responses, n_replies - coded.len());
    c.int("total codes".into(), metrics.external.total_codes, total_codes);
    c.num(
        "mean codes per response".into(),
        metrics.external.mean_codes_per_response,
        ratio(total_codes, coded.len()),
    );
    for code in ExternalMICode::ALL {
        let row = metrics.external.code(code).expect("code row");
        let n = coded.iter().filter(|u| u.merged.contains(&code)).count();
        c.int(format!("{code} occurrences"), row.occurrences, n);
        c.num(format!("{code} share"), row.share, ratio(n, total_codes));
        c.num(format!("{code} containment"), row.containment, ratio(n, coded.len()));
    }
    for class in Consistency::ALL {
        let n: usize = coded
            .iter()
            .map(|u| u.merged.iter().filter(|code| classify_consistency(**code) == Some(class)).count())
            .sum();
        let row = metrics.external.consistency.iter().find(|f| f.key == class).expect("class row");
        c.int(format!("{class} count"), row.count, n);
        c.num(format!("{class} share"), row.share, ratio(n, total_codes));
    }

    let max_turn = corpus
        .iter()
        .flat_map(|t| t.entries.iter())
        .map(|e| e.turn_index)
        .max();
    for turn in 0..=max_turn.unwrap_or(0) {
        if max_turn.is_none() {
            break;
        }
        let mut agent_sum = 0;
        let mut agent_n = 0;
        let mut user_sum = 0;
        let mut user_n = 0;
        for t in corpus {
            let in_turn = |kind: EntryKind| t.entries.iter().filter(move |e| e.turn_index == turn && e.kind == kind);
            if in_turn(EntryKind::Reply).next().is_some() {
                agent_n += 1;
                agent_sum += in_turn(EntryKind::Reply).map(|e| e.content.chars().count()).sum::<usize>();
            }
            if in_turn(EntryKind::User).next().is_some() {
                user_n += 1;
                user_sum += in_turn(EntryKind::User).map(|e| e.content.chars().count()).sum::<usize>();
            }
        }
        match metrics.turn_lengths.iter().find(|l| l.turn_index == turn) {
            Some(row) => {
                c.int(format!("turn {turn} agent samples"), row.agent_samples, agent_n);
                c.int(format!("turn {turn} user samples"), row.user_samples, user_n);
                c.num(format!("turn {turn} agent length"), row.agent_mean_chars, ratio(agent_sum, agent_n));
                c.num(format!("turn {turn} user length"), row.user_mean_chars, ratio(user_sum, user_n));
            }
            None if agent_n + user_n > 0 => c.0.push(format!("turn {turn} missing from lengths")),
            None => {}
        }

        for state in DialogueStateId::ALL {
            let n = corpus
                .iter()
                .filter(|t| {
                    t.entries
                        .iter()
                        .filter(|e| e.turn_index == turn && e.kind == EntryKind::Reply)
                        .last()
                        .is_some_and(|e| e.state == state)
                })
                .count();
            let got = metrics
                .state_progression
                .iter()
                .find(|p| p.turn_index == turn)
                .and_then(|p| p.counts.get(&state).copied())
                .unwrap_or(0);
            c.int(format!("turn {turn} {state} transcripts"), got, n);
        }
    }

    for (name, sum) in [
        ("state shares", metrics.states.iter().map(|s| s.share).sum::<f64>()),
        ("strategy shares", metrics.strategies.iter().map(|s| s.share).sum::<f64>()),
        ("code shares", metrics.external.codes.iter().map(|s| s.share).sum::<f64>()),
        ("consistency shares", metrics.external.consistency.iter().map(|s| s.share).sum::<f64>()),
    ] {
        let nonempty = match name {
            "state shares" => n_replies > 0,
            "strategy shares" => with_strategy > 0,
            _ => total_codes > 0,
        };
        let want = if nonempty { 1.0 } else { 0.0 };
        if (sum - want).abs() > TOLERANCE {
            c.0.push(format!("{name} sum to {sum}, expected {want}"));
        }
    }
    c.0
}
