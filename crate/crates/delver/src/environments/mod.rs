//! Pluggable action environments. The explorer executes every non-Finish
//! node against an environment to obtain its observation; sessions are cheap
//! to clone because depth-first backtracking snapshots one per node.

pub mod game24;
pub mod wiki;

use crate::types::Action;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    /// Lookup is a cursor over the last successfully searched document, so it
    /// is meaningless before any Search succeeded.
    #[error("lookup before any successful search")]
    LookupBeforeSearch,
}

/// An action environment. The environment itself is immutable and shared; all
/// mutable cursor state lives in the per-branch `Session` so the explorer can
/// snapshot and restore it when backtracking.
pub trait Environment {
    type Session: Clone;

    fn new_session(&self) -> Self::Session;

    /// Executes one action, returning its observation text.
    fn step(&self, session: &mut Self::Session, action: &Action) -> Result<String, EnvError>;
}
