//! Turns a question into the entities that seed the search branches.
//!
//! The model is asked for a bracketed list of quoted strings. Parsing is
//! total: any reply either yields entities or a typed parse error, and parse
//! errors trigger identical re-prompts before falling back to the whole
//! question as a single entity.

use crate::gateway::{CallMeter, Gateway, MeterError};
use crate::prompts::extraction_messages;
use crate::types::{Entity, Question};

/// Why a reply could not be read as an entity list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntityParseError {
    /// No bracketed list of quoted strings anywhere in the reply.
    NoListFound,
    /// A list parsed but held no usable entries (empty, or all blank).
    EmptyList,
}

impl std::fmt::Display for EntityParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntityParseError::NoListFound => write!(f, "no_list_found"),
            EntityParseError::EmptyList => write!(f, "empty_list"),
        }
    }
}

impl std::error::Error for EntityParseError {}

/// Extracts the first bracketed list of quoted strings from a model reply.
///
/// Every `[` is tried as a list opener against each following `]` until one
/// substring parses as a JSON array of strings; the first success wins, so
/// surrounding prose and stray brackets are ignored. Entries are trimmed and
/// blanks dropped.
pub fn parse_entity_list(raw: &str) -> Result<Vec<String>, EntityParseError> {
    let bytes = raw.as_bytes();
    let opens = (0..bytes.len()).filter(|&i| bytes[i] == b'[');
    let mut found_list = false;
    for start in opens {
        for end in (start + 1..bytes.len()).filter(|&j| bytes[j] == b']') {
            let candidate = &raw[start..=end];
            if let Ok(items) = serde_json::from_str::<Vec<String>>(candidate) {
                found_list = true;
                let cleaned: Vec<String> = items
                    .into_iter()
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if cleaned.is_empty() {
                    // Keep scanning: a later bracket pair may hold the real
                    // list, but remember we saw an empty one.
                    continue;
                }
                return Ok(cleaned);
            }
        }
    }
    if found_list {
        Err(EntityParseError::EmptyList)
    } else {
        Err(EntityParseError::NoListFound)
    }
}

/// Entities for a question, plus whether they came from the fallback path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionOutcome {
    pub entities: Vec<Entity>,
    /// True when every attempt failed to parse and the question text itself
    /// was used as the single entity.
    pub fallback: bool,
}

/// Anything that can seed branches for a question.
pub trait EntitySource {
    fn entities(
        &self,
        question: &Question,
        meter: &mut CallMeter,
    ) -> Result<ExtractionOutcome, MeterError>;
}

/// Model-backed entity extraction with retry-then-fallback semantics.
pub struct LlmExtractor<'a> {
    gateway: &'a Gateway,
    temperature: f64,
    /// Extra attempts after the first when a reply fails to parse.
    retries: u32,
    /// Cap on how many entities (and therefore branches) survive.
    max_branches: Option<usize>,
}

impl<'a> LlmExtractor<'a> {
    pub fn new(
        gateway: &'a Gateway,
        temperature: f64,
        retries: u32,
        max_branches: Option<usize>,
    ) -> Self {
        Self {
            gateway,
            temperature,
            retries,
            max_branches,
        }
    }
}

/// Case-insensitive dedup keeping the first spelling seen, then an optional
/// cap on the survivor count.
fn dedup_and_cap(names: Vec<String>, cap: Option<usize>) -> Vec<Entity> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for name in names {
        if seen.insert(name.to_lowercase()) {
            out.push(Entity::new(name));
        }
    }
    if let Some(cap) = cap {
        out.truncate(cap);
    }
    out
}

impl EntitySource for LlmExtractor<'_> {
    fn entities(
        &self,
        question: &Question,
        meter: &mut CallMeter,
    ) -> Result<ExtractionOutcome, MeterError> {
        let messages = extraction_messages(question);
        let attempts = 1 + self.retries as usize;
        for _ in 0..attempts {
            // Re-prompts are byte-identical: sampling alone should vary the
            // reply, and stable requests keep recorded digests meaningful.
            let request = self.gateway.request(self.temperature, messages.clone());
            let response = meter.complete(self.gateway, &request)?;
            if let Ok(names) = parse_entity_list(&response.content) {
                return Ok(ExtractionOutcome {
                    entities: dedup_and_cap(names, self.max_branches),
                    fallback: false,
                });
            }
        }
        Ok(ExtractionOutcome {
            entities: vec![Entity::new(question.text.clone())],
            fallback: true,
        })
    }
}
