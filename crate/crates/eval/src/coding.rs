//! External MI coding of coach utterances with an LLM coder.
//!
//! Each sentence is coded separately with a prompt that lists every code with
//! its definition and examples; the utterance's codes are the union of its
//! sentences' codes.

use std::collections::BTreeSet;

use coach_core::ModelSettings;
use coach_llm::{complete, ChatMessage, CompletionRequest, GatewayError, Provider, ProviderResponse, ScriptedProvider};
use serde::{Deserialize, Serialize};

use crate::codes::ExternalMICode;
use crate::sentences::split_sentences;

pub type CodeSet = BTreeSet<ExternalMICode>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodedUtterance {
    pub text: String,
    pub sentences: Vec<String>,
    pub sentence_codes: Vec<CodeSet>,
    pub merged: CodeSet,
}

impl CodedUtterance {
    pub fn from_sentences(text: impl Into<String>, sentences: Vec<String>, sentence_codes: Vec<CodeSet>) -> Self {
        let merged = sentence_codes.iter().flatten().copied().collect();
        Self {
            text: text.into(),
            sentences,
            sentence_codes,
            merged,
        }
    }

    /// Codes that count towards aggregates (everything but `Unknown`).
    pub fn known_codes(&self) -> impl Iterator<Item = ExternalMICode> + '_ {
        self.merged.iter().copied().filter(|c| *c != ExternalMICode::Unknown)
    }
}

/// The coder prompt for one sentence.
pub fn coding_prompt(utterance: &str) -> String {
    let mut prompt = format!("What are all possible strategies of this coach utterance: {utterance}?\nStrategy:\n");
    for code in ExternalMICode::ALL {
        let examples: Vec<String> = code.examples().iter().map(|e| format!("\"{e}\"")).collect();
        prompt.push_str(&format!(
            "{}: {} Positive examples: {}\n",
            code.name(),
            code.definition(),
            examples.join(" ")
        ));
    }
    let names: Vec<&str> = ExternalMICode::ALL.iter().map(|c| c.name()).collect();
    prompt.push_str(&format!("Only choose from this list [{}]\n", names.join(", ")));
    prompt.push_str("Please say unknown only if you cannot find an answer from the list. Format:[strategies_list]");
    prompt
}

pub fn coding_request(utterance: &str, model: &ModelSettings) -> CompletionRequest {
    CompletionRequest {
        model_id: model.model_id.clone(),
        temperature: model.temperature,
        messages: vec![ChatMessage::system(coding_prompt(utterance))],
        tools: None,
        forced_tool: None,
    }
}

/// Reads the coder's bracketed list. Names outside the catalog, the literal
/// "unknown" and an empty answer all become `Unknown`.
pub fn parse_codes(raw: &str) -> CodeSet {
    let body = match (raw.find('['), raw.rfind(']')) {
        (Some(open), Some(close)) if open < close => &raw[open + 1..close],
        _ => raw,
    };
    let mut codes: CodeSet = body
        .split([',', ';', '\n'])
        .map(|item| item.trim().trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|item| !item.is_empty())
        .map(|item| ExternalMICode::from_name(item).unwrap_or(ExternalMICode::Unknown))
        .collect();
    if codes.is_empty() {
        codes.insert(ExternalMICode::Unknown);
    }
    codes
}

/// An LLM coder bound to its model settings.
pub struct Coder<'a> {
    pub provider: &'a dyn Provider,
    pub model: ModelSettings,
}

impl<'a> Coder<'a> {
    pub fn new(provider: &'a dyn Provider, model: ModelSettings) -> Self {
        Self { provider, model }
    }

    pub fn code_sentence(&self, sentence: &str) -> Result<CodeSet, GatewayError> {
        let reply = complete(self.provider, &coding_request(sentence, &self.model))?;
        Ok(parse_codes(&reply.content))
    }

    /// Codes every sentence of `text`. Any provider failure fails the whole
    /// utterance so partial codings never reach the aggregates.
    pub fn code_utterance(&self, text: &str) -> Result<CodedUtterance, GatewayError> {
        let sentences: Vec<String> = split_sentences(text).into_iter().map(str::to_string).collect();
        let codes = sentences
            .iter()
            .map(|s| self.code_sentence(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CodedUtterance::from_sentences(text, sentences, codes))
    }
}

pub fn code_utterance(text: &str, provider: &dyn Provider, model: &ModelSettings) -> Result<CodedUtterance, GatewayError> {
    Coder::new(provider, model.clone()).code_utterance(text)
}

/// Recovers the sentence a coding request was built for.
pub fn utterance_of(request: &CompletionRequest) -> Option<&str> {
    let prompt = request.system_prompt();
    let rest = prompt.strip_prefix("What are all possible strategies of this coach utterance: ")?;
    rest.split_once("?\nStrategy:\n").map(|(u, _)| u)
}

const CLOSED_OPENERS: [&str; 14] = [
    "do ", "does ", "did ", "is ", "are ", "was ", "were ", "can ", "could ", "would ", "will ", "have ", "has ",
    "should ",
];

/// Keyword rules for one sentence. A crude offline stand-in for an LLM coder,
/// for demos and smoke runs; not suitable for analysis.
pub fn keyword_codes(sentence: &str) -> CodeSet {
    use ExternalMICode::*;
    let lower = sentence.trim().to_lowercase();
    let has = |needles: &[&str]| needles.iter().any(|n| lower.contains(n));
    let mut codes = CodeSet::new();
    if lower.ends_with('?') {
        if has(&["would it be ok", "would it be alright", "may i ", "can i suggest", "would you like some"]) {
            codes.insert(AdviseWithPermission);
        } else if CLOSED_OPENERS.iter().any(|o| lower.starts_with(o)) {
            codes.insert(ClosedQuestion);
        } else {
            codes.insert(OpenQuestion);
        }
    }
    if has(&["you should", "you need to", "you must", "try to ", "make sure"]) {
        codes.insert(AdviseWithoutPermission);
    }
    if has(&["great job", "well done", "good job", "that's great", "impressive", "proud of"]) {
        codes.insert(Affirm);
    }
    if has(&["it sounds like", "sounds like you", "you feel", "you're feeling"]) {
        codes.insert(SimpleReflection);
    }
    if has(&["that's understandable", "that sounds hard", "that can be hard", "i'm sorry"]) {
        codes.insert(Support);
    }
    if lower.chars().any(|c| c.is_ascii_digit()) && !lower.ends_with('?') {
        codes.insert(GivingInformation);
    }
    if codes.is_empty() {
        codes.insert(Unknown);
    }
    codes
}

/// A provider that answers coding prompts with [`keyword_codes`].
pub fn keyword_coder() -> ScriptedProvider {
    ScriptedProvider::new(|request| {
        let codes = keyword_codes(utterance_of(request).unwrap_or(""));
        let names: Vec<&str> = codes.iter().map(|c| c.name()).collect();
        Ok(ProviderResponse::text(format!("[{}]", names.join(", "))))
    })
}
