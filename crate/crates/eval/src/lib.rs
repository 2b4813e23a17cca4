//! Evaluation of coaching conversations.
//!
//! Three analyses: external MI coding of coach replies with an LLM coder
//! ([`coding`]), aggregate transcript metrics ([`metrics`]), and a
//! counterfactual comparison of the full pipeline against a system-prompt-only
//! baseline ([`counterfactual`]). [`report`] turns results into CSV tables,
//! SVG charts and a manifest.

pub mod codes;
pub mod coding;
pub mod counterfactual;
pub mod error;
pub mod metrics;
pub mod report;
pub mod sentences;
pub mod svg;
pub mod transcript;

pub use codes::{classify_consistency, Consistency, ExternalMICode};
pub use coding::{code_utterance, parse_codes, CodeSet, CodedUtterance, Coder};
pub use counterfactual::{
    load_seed_dir, Agent, AgentSummary, BarrierPersona, Cell, CounterfactualConfig, CounterfactualRun, Harness,
    SeedHistory, BARRIER_PERSONAS,
};
pub use error::{EvalError, Result};
pub use metrics::{summarize_codes, transcript_metrics, CodeSummary, TranscriptMetrics};
pub use report::{render_counterfactual_report, render_report, Manifest};
pub use sentences::split_sentences;
pub use transcript::{load_transcript, load_transcript_dir, AnnotatedTranscript, EntryKind, TranscriptEntry};
