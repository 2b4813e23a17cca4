//! CSV tables, SVG charts and the run manifest.
//!
//! Tables with nothing to report keep their header row. Shares are written
//! with full precision so rows of a partition sum back to 1.

use std::fs;
use std::path::{Path, PathBuf};

use coach_core::{DialogueStateId, InternalStrategy};
use serde::{Deserialize, Serialize};

use crate::codes::{Consistency, ExternalMICode};
use crate::counterfactual::{Agent, CounterfactualRun};
use crate::error::Result;
use crate::metrics::{share, TranscriptMetrics, TurnCounts};
use crate::svg::{BarChart, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        let bytes = writer.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn int(v: usize) -> String {
    v.to_string()
}

fn turn_table<K: Ord + Copy>(
    name: &'static str,
    key_header: &'static str,
    turns: &[TurnCounts<K>],
    label: impl Fn(K) -> String,
) -> Table {
    let mut table = Table::new(name, &["turn_index", key_header, "count", "share"]);
    for turn in turns {
        let total: usize = turn.counts.values().sum();
        for (&key, &count) in &turn.counts {
            table.row(vec![int(turn.turn_index), label(key), int(count), num(share(count, total))]);
        }
    }
    table
}

pub fn metrics_tables(metrics: &TranscriptMetrics) -> Vec<Table> {
    let mut states = Table::new(
        "states",
        &["state", "agent_messages", "share", "mean_agent_messages", "tool_calls", "tool_call_share"],
    );
    if metrics.transcripts > 0 {
        for s in &metrics.states {
            states.row(vec![
                s.state.to_string(),
                int(s.agent_messages),
                num(s.share),
                num(s.mean_agent_messages),
                int(s.tool_calls),
                num(s.tool_call_share),
            ]);
        }
    }

    let mut lengths = Table::new(
        "turn_lengths",
        &["turn_index", "agent_mean_chars", "user_mean_chars", "agent_samples", "user_samples"],
    );
    for t in &metrics.turn_lengths {
        lengths.row(vec![
            int(t.turn_index),
            num(t.agent_mean_chars),
            num(t.user_mean_chars),
            int(t.agent_samples),
            int(t.user_samples),
        ]);
    }

    let mut strategies = Table::new("internal_strategies", &["strategy", "count", "share"]);
    if metrics.agent_messages > 0 {
        for f in &metrics.strategies {
            strategies.row(vec![f.key.to_string(), int(f.count), num(f.share)]);
        }
    }

    let external = &metrics.external;
    let mut codes = Table::new(
        "external_codes",
        &["code", "consistency", "occurrences", "share", "containment"],
    );
    if external.responses > 0 {
        for c in &external.codes {
            codes.row(vec![
                c.code.to_string(),
                c.consistency.to_string(),
                int(c.occurrences),
                num(c.share),
                num(c.containment),
            ]);
        }
    }

    let mut consistency = Table::new("consistency", &["class", "count", "share"]);
    if external.total_codes > 0 {
        for f in &external.consistency {
            consistency.row(vec![f.key.to_string(), int(f.count), num(f.share)]);
        }
    }

    let mut summary = Table::new("summary", &["metric", "value"]);
    if metrics.transcripts > 0 {
        for (name, value) in [
            ("transcripts", int(metrics.transcripts)),
            ("agent_messages", int(metrics.agent_messages)),
            ("user_messages", int(metrics.user_messages)),
            ("tool_calls", int(metrics.tool_calls)),
            ("coded_responses", int(external.responses)),
            ("uncoded_responses", int(metrics.uncoded_responses)),
            ("mean_codes_per_response", num(external.mean_codes_per_response)),
        ] {
            summary.row(vec![name.to_string(), value]);
        }
    }

    vec![
        summary,
        states,
        turn_table("state_progression", "state", &metrics.state_progression, |s: DialogueStateId| {
            s.to_string()
        }),
        lengths,
        strategies,
        turn_table("strategies_by_turn", "strategy", &metrics.strategies_by_turn, |s: InternalStrategy| {
            s.to_string()
        }),
        codes,
        turn_table("codes_by_turn", "code", &metrics.codes_by_turn, |c: ExternalMICode| c.to_string()),
        consistency,
        turn_table("consistency_by_turn", "class", &metrics.consistency_by_turn, |c: Consistency| {
            c.to_string()
        }),
    ]
}

fn stacked_by_turn<K: Ord + Copy>(
    title: &str,
    y_label: &str,
    turns: &[TurnCounts<K>],
    keys: &[K],
    label: impl Fn(K) -> String,
    normalize: bool,
) -> BarChart {
    let series = keys
        .iter()
        .filter(|k| turns.iter().any(|t| t.counts.contains_key(k)))
        .map(|&key| Series {
            name: label(key),
            values: turns
                .iter()
                .map(|t| {
                    let count = t.counts.get(&key).copied().unwrap_or(0);
                    if normalize {
                        share(count, t.counts.values().sum())
                    } else {
                        count as f64
                    }
                })
                .collect(),
        })
        .collect();
    BarChart {
        title: title.to_string(),
        x_label: "turn index".to_string(),
        y_label: y_label.to_string(),
        categories: turns.iter().map(|t| t.turn_index.to_string()).collect(),
        series,
        stacked: true,
    }
}

/// One chart per analysis figure, keyed by file name.
pub fn metrics_charts(metrics: &TranscriptMetrics) -> Vec<(String, BarChart)> {
    vec![
        (
            "state_progression.svg".into(),
            stacked_by_turn(
                "Dialogue states by turn",
                "transcripts",
                &metrics.state_progression,
                &DialogueStateId::ALL,
                |s| s.to_string(),
                false,
            ),
        ),
        (
            "turn_lengths.svg".into(),
            BarChart {
                title: "Mean message length by turn".into(),
                x_label: "turn index".into(),
                y_label: "characters".into(),
                categories: metrics.turn_lengths.iter().map(|t| t.turn_index.to_string()).collect(),
                series: vec![
                    Series {
                        name: "coach".into(),
                        values: metrics.turn_lengths.iter().map(|t| t.agent_mean_chars).collect(),
                    },
                    Series {
                        name: "user".into(),
                        values: metrics.turn_lengths.iter().map(|t| t.user_mean_chars).collect(),
                    },
                ],
                stacked: false,
            },
        ),
        (
            "internal_strategies.svg".into(),
            stacked_by_turn(
                "Internal strategies by turn",
                "messages",
                &metrics.strategies_by_turn,
                &InternalStrategy::ALL,
                |s| s.to_string(),
                false,
            ),
        ),
        (
            "external_codes.svg".into(),
            stacked_by_turn(
                "External MI codes by turn",
                "codes",
                &metrics.codes_by_turn,
                &ExternalMICode::ALL,
                |c| c.to_string(),
                false,
            ),
        ),
        (
            "consistency.svg".into(),
            stacked_by_turn(
                "MI consistency by turn",
                "share of codes",
                &metrics.consistency_by_turn,
                &Consistency::ALL,
                |c| c.to_string(),
                true,
            ),
        ),
    ]
}

pub fn counterfactual_tables(run: &CounterfactualRun) -> Vec<Table> {
    let mut cells = Table::new("counterfactual_cells", &["history", "persona", "agent", "repeat", "status", "codes", "error"]);
    for cell in &run.cells {
        let codes = cell
            .coding
            .as_ref()
            .map(|c| c.merged.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; "))
            .unwrap_or_default();
        cells.row(vec![
            cell.history_id.clone(),
            cell.persona.clone(),
            cell.agent.to_string(),
            int(cell.repeat),
            if cell.completed() { "completed" } else { "failed" }.to_string(),
            codes,
            cell.error.clone().unwrap_or_default(),
        ]);
    }

    let mut summary = Table::new(
        "counterfactual_summary",
        &["agent", "cells", "completed", "failed", "mean_codes_per_response"],
    );
    let mut consistency = Table::new("counterfactual_consistency", &["agent", "class", "count", "share"]);
    let mut containment = Table::new("counterfactual_containment", &["agent", "code", "responses", "containment"]);
    for s in &run.summaries {
        summary.row(vec![
            s.agent.to_string(),
            int(s.cells),
            int(s.completed),
            int(s.failed),
            num(s.codes.mean_codes_per_response),
        ]);
        if s.codes.total_codes > 0 {
            for f in &s.codes.consistency {
                consistency.row(vec![s.agent.to_string(), f.key.to_string(), int(f.count), num(f.share)]);
            }
        }
        if s.codes.responses > 0 {
            for c in &s.codes.codes {
                containment.row(vec![s.agent.to_string(), c.code.to_string(), int(c.occurrences), num(c.containment)]);
            }
        }
    }
    vec![cells, summary, consistency, containment]
}

pub fn counterfactual_charts(run: &CounterfactualRun) -> Vec<(String, BarChart)> {
    let agents: Vec<Agent> = run.summaries.iter().map(|s| s.agent).collect();
    let consistency = BarChart {
        title: "MI consistency by agent".into(),
        x_label: "agent".into(),
        y_label: "share of codes".into(),
        categories: agents.iter().map(|a| a.to_string()).collect(),
        series: Consistency::ALL
            .iter()
            .map(|&class| Series {
                name: class.to_string(),
                values: run.summaries.iter().map(|s| s.codes.consistency_share(class)).collect(),
            })
            .collect(),
        stacked: true,
    };
    let containment = BarChart {
        title: "Responses containing each code".into(),
        x_label: "code".into(),
        y_label: "share of responses".into(),
        categories: ExternalMICode::ALL.iter().map(|c| c.to_string()).collect(),
        series: run
            .summaries
            .iter()
            .map(|s| Series {
                name: s.agent.to_string(),
                values: s.codes.codes.iter().map(|c| c.containment).collect(),
            })
            .collect(),
        stacked: false,
    };
    vec![
        ("counterfactual_consistency.svg".into(), consistency),
        ("counterfactual_containment.svg".into(), containment),
    ]
}

fn write_all(dir: &Path, tables: Vec<Table>, charts: Vec<(String, BarChart)>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in tables {
        let path = dir.join(table.file_name());
        fs::write(&path, table.to_csv()?)?;
        written.push(path);
    }
    for (name, chart) in charts {
        let path = dir.join(name);
        fs::write(&path, chart.to_svg())?;
        written.push(path);
    }
    Ok(written)
}

/// Writes the transcript tables and charts plus `metrics.json` into `dir`.
pub fn render_report(metrics: &TranscriptMetrics, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = write_all(dir, metrics_tables(metrics), metrics_charts(metrics))?;
    let path = dir.join("metrics.json");
    fs::write(&path, serde_json::to_string_pretty(metrics)? + "\n")?;
    written.push(path);
    Ok(written)
}

pub fn render_counterfactual_report(run: &CounterfactualRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = write_all(dir, counterfactual_tables(run), counterfactual_charts(run))?;
    let path = dir.join("counterfactual.json");
    fs::write(&path, serde_json::to_string_pretty(run)? + "\n")?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderInfo {
    pub provider: String,
    pub model_id: String,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteHash {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coach: Option<ProviderInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coder: Option<ProviderInfo>,
    pub cassettes: Vec<CassetteHash>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            coach: None,
            coder: None,
            cassettes: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_cassette(&mut self, path: &Path) -> Result<()> {
        let sha256 = coach_llm::replay::file_sha256(path)?;
        self.cassettes.push(CassetteHash {
            path: path.display().to_string(),
            sha256,
        });
        Ok(())
    }

    /// Records the written files by name and saves `manifest.json` in `dir`.
    pub fn write(mut self, dir: &Path, outputs: &[PathBuf]) -> Result<PathBuf> {
        self.outputs = outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        self.outputs.sort();
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }
}
