//! Candidate child generation: one completion call per candidate, each prompt
//! carrying the question, every error record from earlier branches, the
//! branch prefix, and the candidates already produced at this expansion.

use crate::gateway::{CallMeter, Gateway, MeterError};
use crate::prompts::{generation_guide, generation_messages, SiblingEntry};
use crate::types::{Action, ErrorRecord, Node, Question};

/// A parsed (thought, action) pair that has not yet been placed in the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDraft {
    pub thought: String,
    pub action: Action,
}

/// Why a reply could not be read as a thought/action block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeParseError {
    MissingThought,
    MissingAction,
    UnknownActionVerb { verb: String },
    EmptyPayload,
}

impl std::fmt::Display for NodeParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeParseError::MissingThought => write!(f, "missing_thought"),
            NodeParseError::MissingAction => write!(f, "missing_action"),
            NodeParseError::UnknownActionVerb { verb } => {
                write!(f, "unknown_action_verb: {verb}")
            }
            NodeParseError::EmptyPayload => write!(f, "empty_payload"),
        }
    }
}

impl std::error::Error for NodeParseError {}

/// Matches `<marker>:` or `<marker> 3:` at the start of a trimmed line,
/// case-insensitively, returning the text after the colon.
fn strip_marker<'a>(line: &'a str, marker: &str) -> Option<&'a str> {
    let trimmed = line.trim_start();
    // get() refuses mid-character indexes, which plain slicing would panic
    // on; the marker is ASCII, so such a line cannot start with it anyway.
    let head = trimmed.get(..marker.len())?;
    if !head.eq_ignore_ascii_case(marker) {
        return None;
    }
    let rest = trimmed[marker.len()..].trim_start();
    let rest = rest.trim_start_matches(|c: char| c.is_ascii_digit());
    rest.strip_prefix(':')
}

/// Parses one action of the grammar `Search[...] | Lookup[...] | Finish[...]
/// | Propose[...]`. The verb is case-insensitive; the payload spans from the
/// first `[` to the last `]` so payloads may themselves contain brackets.
pub fn parse_action(text: &str) -> Result<Action, NodeParseError> {
    let text = text.trim();
    let open = text.find('[');
    let close = text.rfind(']');
    let (verb, payload) = match (open, close) {
        (Some(o), Some(c)) if o < c => (text[..o].trim(), text[o + 1..c].trim()),
        _ => (text, ""),
    };
    let make = match verb.to_ascii_lowercase().as_str() {
        "search" => Action::Search as fn(String) -> Action,
        "lookup" => Action::Lookup,
        "finish" => Action::Finish,
        "propose" => Action::Propose,
        _ => {
            return Err(NodeParseError::UnknownActionVerb {
                verb: verb.to_string(),
            })
        }
    };
    if payload.is_empty() {
        return Err(NodeParseError::EmptyPayload);
    }
    Ok(make(payload.to_string()))
}

/// Extracts the first `Thought:` block and the first `Action:` line after it.
///
/// Pure and total: any input maps to a draft or a typed error, never a panic.
/// Numbered markers ("Thought 1:") are accepted. A thought may span several
/// lines; it ends where the action line starts.
pub fn parse_node_block(raw: &str) -> Result<NodeDraft, NodeParseError> {
    let mut lines = raw.lines();
    let mut thought = String::new();
    let mut in_thought = false;
    for line in lines.by_ref() {
        if let Some(rest) = strip_marker(line, "thought") {
            thought.push_str(rest.trim());
            in_thought = true;
            break;
        }
    }
    if !in_thought {
        return Err(NodeParseError::MissingThought);
    }
    let mut action_text = None;
    for line in lines {
        if let Some(rest) = strip_marker(line, "action") {
            action_text = Some(rest.trim().to_string());
            break;
        }
        let extra = line.trim();
        if !extra.is_empty() {
            if !thought.is_empty() {
                thought.push(' ');
            }
            thought.push_str(extra);
        }
    }
    if thought.is_empty() {
        return Err(NodeParseError::MissingThought);
    }
    let action_text = action_text.ok_or(NodeParseError::MissingAction)?;
    let action = parse_action(&action_text)?;
    Ok(NodeDraft { thought, action })
}

/// The outcome of one expansion: the surviving drafts plus counts of what the
/// k slots spent on duplicates and unparseable replies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationBatch {
    pub drafts: Vec<NodeDraft>,
    pub duplicates_discarded: u32,
    pub failed_slots: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    /// Every slot was spent on duplicates or parse failures; the caller
    /// should treat the parent as a dead end.
    #[error("expansion produced no candidates ({failed_slots} parse failures, {duplicates_discarded} duplicates)")]
    AllCandidatesFailed {
        failed_slots: u32,
        duplicates_discarded: u32,
    },
    #[error(transparent)]
    Meter(#[from] MeterError),
}

/// Anything that can propose child nodes for a branch prefix.
pub trait CandidateSource {
    fn generate(
        &self,
        question: &Question,
        errors: &[ErrorRecord],
        prefix: &[Node],
        initial_siblings: &[SiblingEntry],
        k: u32,
        meter: &mut CallMeter,
    ) -> Result<GenerationBatch, GenerationError>;
}

/// Model-backed candidate generation.
pub struct LlmGenerator<'a> {
    gateway: &'a Gateway,
    temperature: f64,
    /// Extra attempts per slot when a reply fails to parse.
    retries: u32,
    /// Overrides the per-dataset generation guide when set.
    guide: Option<String>,
}

impl<'a> LlmGenerator<'a> {
    pub fn new(gateway: &'a Gateway, temperature: f64, retries: u32) -> Self {
        Self {
            gateway,
            temperature,
            retries,
            guide: None,
        }
    }

    pub fn with_guide(mut self, guide: impl Into<String>) -> Self {
        self.guide = Some(guide.into());
        self
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Dedup key: exact (thought, action) equality after whitespace
/// normalization. Semantic near-duplicates are intentionally kept.
fn draft_key(thought: &str, action: &Action) -> (String, String) {
    (normalize_ws(thought), normalize_ws(&action.to_string()))
}

impl CandidateSource for LlmGenerator<'_> {
    fn generate(
        &self,
        question: &Question,
        errors: &[ErrorRecord],
        prefix: &[Node],
        initial_siblings: &[SiblingEntry],
        k: u32,
        meter: &mut CallMeter,
    ) -> Result<GenerationBatch, GenerationError> {
        let guide: &str = self
            .guide
            .as_deref()
            .unwrap_or_else(|| generation_guide(question.dataset));
        let mut siblings: Vec<SiblingEntry> = initial_siblings.to_vec();
        let mut seen: Vec<(String, String)> = initial_siblings
            .iter()
            .map(|s| (normalize_ws(&s.thought), normalize_ws(&s.action)))
            .collect();
        let mut drafts = Vec::new();
        let mut duplicates_discarded = 0u32;
        let mut failed_slots = 0u32;

        for _ in 0..k {
            let messages = generation_messages(guide, question, errors, prefix, &siblings);
            let mut parsed = None;
            for _ in 0..=self.retries {
                // Identical re-prompt: sampling alone should vary the reply.
                let request = self.gateway.request(self.temperature, messages.clone());
                let response = meter.complete(self.gateway, &request)?;
                match parse_node_block(&response.content) {
                    Ok(draft) => {
                        parsed = Some(draft);
                        break;
                    }
                    Err(_) => continue,
                }
            }
            match parsed {
                None => failed_slots += 1,
                Some(draft) => {
                    let key = draft_key(&draft.thought, &draft.action);
                    if seen.contains(&key) {
                        duplicates_discarded += 1;
                    } else {
                        seen.push(key);
                        siblings.push(SiblingEntry {
                            thought: draft.thought.clone(),
                            action: draft.action.to_string(),
                            observation: None,
                        });
                        drafts.push(draft);
                    }
                }
            }
        }

        if drafts.is_empty() {
            return Err(GenerationError::AllCandidatesFailed {
                failed_slots,
                duplicates_discarded,
            });
        }
        Ok(GenerationBatch {
            drafts,
            duplicates_discarded,
            failed_slots,
        })
    }
}
