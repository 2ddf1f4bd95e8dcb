//! Local-corpus lookup environment with ReAct Search/Lookup/Finish semantics.
//! Hermetic and deterministic: a fixed corpus plus a fixed session history
//! always produce the same observations.

use super::{EnvError, Environment};
use crate::types::Action;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDoc {
    pub title: String,
    pub paragraphs: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus is not a JSON object of title -> paragraph list: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate title (case-insensitive): {title}")]
    DuplicateTitle { title: String },
    #[error("document has no paragraphs: {title}")]
    EmptyDocument { title: String },
}

/// An immutable set of titled documents. On disk: a JSON object mapping each
/// title to its list of paragraph strings.
#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<CorpusDoc>,
    by_lower_title: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<CorpusDoc>) -> Result<Self, CorpusError> {
        let mut by_lower_title = BTreeMap::new();
        for (idx, doc) in docs.iter().enumerate() {
            if doc.paragraphs.is_empty() {
                return Err(CorpusError::EmptyDocument {
                    title: doc.title.clone(),
                });
            }
            if by_lower_title
                .insert(doc.title.to_lowercase(), idx)
                .is_some()
            {
                return Err(CorpusError::DuplicateTitle {
                    title: doc.title.clone(),
                });
            }
        }
        Ok(Corpus {
            docs,
            by_lower_title,
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self, CorpusError> {
        // BTreeMap keys give a stable, title-sorted document order.
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
        let docs = map
            .into_iter()
            .map(|(title, paragraphs)| CorpusDoc { title, paragraphs })
            .collect();
        Corpus::new(docs)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Corpus::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    fn find(&self, title: &str) -> Option<usize> {
        self.by_lower_title.get(&title.trim().to_lowercase()).copied()
    }
}

fn tokens(text: &str) -> std::collections::BTreeSet<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits text into sentences on `.`, `!`, `?` terminators, keeping the
/// terminator with its sentence.
fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let tail = current.trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

pub const DEFAULT_OBSERVATION_CHARS: usize = 1200;

pub struct WikiEnv {
    corpus: Corpus,
    /// Observation length cap in characters for Search results.
    truncate_chars: usize,
}

#[derive(Debug, Clone, Default)]
pub struct WikiSession {
    /// Index of the last successfully searched document.
    current_doc: Option<usize>,
    lookup_keyword: Option<String>,
    /// How many matching sentences have already been served for the current
    /// keyword in the current document.
    lookup_cursor: usize,
    pub terminal: bool,
}

impl WikiEnv {
    pub fn new(corpus: Corpus) -> Self {
        WikiEnv {
            corpus,
            truncate_chars: DEFAULT_OBSERVATION_CHARS,
        }
    }

    pub fn with_truncate_chars(mut self, chars: usize) -> Self {
        self.truncate_chars = chars;
        self
    }

    /// Up to five titles ranked by distinct-token overlap with the query,
    /// ties broken lexicographically; zero-overlap titles are excluded.
    fn similar_titles(&self, query: &str) -> Vec<&str> {
        let query_tokens = tokens(query);
        let mut scored: Vec<(usize, &str)> = self
            .corpus
            .docs
            .iter()
            .filter_map(|doc| {
                let overlap = tokens(&doc.title).intersection(&query_tokens).count();
                (overlap > 0).then_some((overlap, doc.title.as_str()))
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        scored.into_iter().take(5).map(|(_, t)| t).collect()
    }

    fn search(&self, session: &mut WikiSession, query: &str) -> String {
        match self.corpus.find(query) {
            Some(idx) => {
                session.current_doc = Some(idx);
                session.lookup_keyword = None;
                session.lookup_cursor = 0;
                let first = &self.corpus.docs[idx].paragraphs[0];
                first.chars().take(self.truncate_chars).collect()
            }
            None => {
                let similar = self.similar_titles(query).join(", ");
                format!("Could not find [{query}]. Similar: [{similar}]")
            }
        }
    }

    fn lookup(&self, session: &mut WikiSession, keyword: &str) -> Result<String, EnvError> {
        let doc_idx = session.current_doc.ok_or(EnvError::LookupBeforeSearch)?;
        let changed = session
            .lookup_keyword
            .as_deref()
            .map(|k| !k.eq_ignore_ascii_case(keyword))
            .unwrap_or(true);
        if changed {
            session.lookup_keyword = Some(keyword.to_string());
            session.lookup_cursor = 0;
        }
        let needle = keyword.to_lowercase();
        let doc = &self.corpus.docs[doc_idx];
        let hit = doc
            .paragraphs
            .iter()
            .flat_map(|p| sentences(p))
            .filter(|s| s.to_lowercase().contains(&needle))
            .nth(session.lookup_cursor);
        Ok(match hit {
            Some(sentence) => {
                session.lookup_cursor += 1;
                sentence
            }
            None => "No more results.".to_string(),
        })
    }
}

impl Environment for WikiEnv {
    type Session = WikiSession;

    fn new_session(&self) -> WikiSession {
        WikiSession::default()
    }

    fn step(&self, session: &mut WikiSession, action: &Action) -> Result<String, EnvError> {
        match action {
            Action::Search(q) => Ok(self.search(session, q)),
            Action::Lookup(w) => self.lookup(session, w),
            Action::Finish(a) => {
                session.terminal = true;
                Ok(a.clone())
            }
            Action::Propose(_) => {
                Ok("Invalid action: Propose is not available in this environment.".to_string())
            }
        }
    }
}
