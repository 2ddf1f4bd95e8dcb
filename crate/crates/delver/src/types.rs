//! Core domain types shared by every stage of a search: questions, actions,
//! tree nodes, trajectories, verdicts, and error records.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Which benchmark family a question belongs to. Drives gold-answer handling
/// and environment selection; `Custom` is for ad-hoc questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Hotpotqa,
    Strategyqa,
    Game24,
    #[default]
    Custom,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dataset::Hotpotqa => "hotpotqa",
            Dataset::Strategyqa => "strategyqa",
            Dataset::Game24 => "game24",
            Dataset::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        };
        f.write_str(s)
    }
}

/// A task instance. `difficulty` is only meaningful for hotpotqa questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
    #[serde(default)]
    pub dataset: Dataset,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Question {
            id: id.into(),
            text: text.into(),
            gold_answer: None,
            difficulty: None,
            dataset: Dataset::Custom,
        }
    }

    /// Difficulty tags are a hotpotqa concept; carrying one on another
    /// dataset would silently skew per-difficulty aggregation.
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.id.is_empty() {
            return Err(InvariantViolation::new("question id is empty"));
        }
        if self.difficulty.is_some() && self.dataset != Dataset::Hotpotqa {
            return Err(InvariantViolation::new(
                "difficulty is only valid on hotpotqa questions",
            ));
        }
        Ok(())
    }
}

/// A seed entity extracted from the question; each one roots a search branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
}

impl Entity {
    pub fn new(name: impl Into<String>) -> Self {
        Entity { name: name.into() }
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.name.trim().is_empty() {
            return Err(InvariantViolation::new("entity name is empty"));
        }
        Ok(())
    }
}

/// One agent action in the ReAct convention. `Finish` is terminal: it carries
/// the proposed answer and is never executed against an environment tool.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "verb", content = "payload", rename_all = "lowercase")]
pub enum Action {
    Search(String),
    Lookup(String),
    Finish(String),
    Propose(String),
}

impl Action {
    pub fn verb(&self) -> &'static str {
        match self {
            Action::Search(_) => "Search",
            Action::Lookup(_) => "Lookup",
            Action::Finish(_) => "Finish",
            Action::Propose(_) => "Propose",
        }
    }

    pub fn payload(&self) -> &str {
        match self {
            Action::Search(p) | Action::Lookup(p) | Action::Finish(p) | Action::Propose(p) => p,
        }
    }

    pub fn is_finish(&self) -> bool {
        matches!(self, Action::Finish(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.verb(), self.payload())
    }
}

/// Step-feasibility category assigned by the step evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feasibility {
    /// Prioritized for immediate expansion.
    Sure,
    /// Conditionally explored, after every sure node.
    Maybe,
    /// Pruned from the exploration path.
    Impossible,
}

impl fmt::Display for Feasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Feasibility::Sure => "sure",
            Feasibility::Maybe => "maybe",
            Feasibility::Impossible => "impossible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub category: Feasibility,
    pub rationale: String,
}

impl FeasibilityVerdict {
    pub fn new(category: Feasibility, rationale: impl Into<String>) -> Self {
        FeasibilityVerdict {
            category,
            rationale: rationale.into(),
        }
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.rationale.trim().is_empty() {
            return Err(InvariantViolation::new("feasibility rationale is empty"));
        }
        Ok(())
    }
}

/// Outcome of answer verification for a `Finish` payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerVerdict {
    pub on_topic: bool,
    pub rationale: String,
}

/// One node of the search tree: a thought, the action it led to, and (once
/// the action has run) the observation. `observation` is present iff the
/// action has been executed against the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u64,
    /// Index of the entity branch this node belongs to.
    pub branch: usize,
    /// Layer within the branch; the synthetic seed sits at depth 0.
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u64>,
    pub thought: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<FeasibilityVerdict>,
}

impl Node {
    /// Structural checks that need no tree context.
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        match (self.depth, self.parent) {
            (0, Some(_)) => {
                return Err(InvariantViolation::new("layer-0 node has a parent"));
            }
            (d, None) if d > 0 => {
                return Err(InvariantViolation::new("non-root node has no parent"));
            }
            _ => {}
        }
        if let Some(v) = &self.verdict {
            v.validate()?;
        }
        Ok(())
    }

    /// Checks the parent/child link against the actual parent node.
    pub fn validate_child_of(&self, parent: &Node) -> Result<(), InvariantViolation> {
        if self.parent != Some(parent.id) {
            return Err(InvariantViolation::new("parent id mismatch"));
        }
        if self.depth != parent.depth + 1 {
            return Err(InvariantViolation::new(
                "child depth is not parent depth + 1",
            ));
        }
        if self.branch != parent.branch {
            return Err(InvariantViolation::new("child crosses branches"));
        }
        Ok(())
    }
}

/// Maximum characters of each observation kept in a trajectory digest.
pub const DIGEST_OBSERVATION_LIMIT: usize = 300;

/// An ordered path of nodes from a branch's layer-0 seed to some descendant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Trajectory {
    pub nodes: Vec<Node>,
}

impl Trajectory {
    pub fn new(nodes: Vec<Node>) -> Self {
        Trajectory { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tail(&self) -> Option<&Node> {
        self.nodes.last()
    }

    /// Pure structural validation: starts at depth 0, stays on one branch,
    /// has gapless depths, and every consecutive pair is a parent/child link.
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        let first = match self.nodes.first() {
            Some(n) => n,
            None => return Err(InvariantViolation::new("trajectory is empty")),
        };
        if first.depth != 0 {
            return Err(InvariantViolation::new("trajectory does not start at depth 0"));
        }
        for node in &self.nodes {
            node.validate()?;
        }
        for (i, pair) in self.nodes.windows(2).enumerate() {
            pair[1].validate_child_of(&pair[0]).map_err(|e| {
                InvariantViolation::new(format!("at position {}: {}", i + 1, e))
            })?;
        }
        Ok(())
    }

    /// Compact textual form used inside error records: one Thought/Action/Obs
    /// group per node, observations truncated so error prompts stay bounded.
    pub fn digest(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str("Thought: ");
            out.push_str(&node.thought);
            out.push('\n');
            out.push_str("Action: ");
            out.push_str(&node.action.to_string());
            if let Some(obs) = &node.observation {
                out.push('\n');
                out.push_str("Obs: ");
                out.extend(obs.chars().take(DIGEST_OBSERVATION_LIMIT));
            }
        }
        out
    }
}

/// A rejected answer together with the reasoning and the path that produced
/// it. Records are append-only for the lifetime of a search; later branches
/// are prompted with every record accumulated before them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub branch: usize,
    pub rejected_answer: String,
    pub rationale: String,
    pub trajectory_digest: String,
}

/// Why a search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Solved,
    Exhausted,
    BudgetExceeded,
    DepthExhausted,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SearchStatus::Solved => "solved",
            SearchStatus::Exhausted => "exhausted",
            SearchStatus::BudgetExceeded => "budget_exceeded",
            SearchStatus::DepthExhausted => "depth_exhausted",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub llm_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub tool_calls: u64,
    pub wall_time_ms: u64,
}

/// Final result of one solve run. `answer` and `accepted_trajectory` are
/// present iff `status` is `Solved`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_trajectory: Option<Trajectory>,
    pub errors: Vec<ErrorRecord>,
    pub stats: SearchStats,
}

impl SearchOutcome {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        let solved = self.status == SearchStatus::Solved;
        if solved != self.answer.is_some() {
            return Err(InvariantViolation::new(
                "answer must be present iff status is solved",
            ));
        }
        if solved != self.accepted_trajectory.is_some() {
            return Err(InvariantViolation::new(
                "accepted trajectory must be present iff status is solved",
            ));
        }
        if let Some(t) = &self.accepted_trajectory {
            t.validate()?;
            if !t.tail().map(|n| n.action.is_finish()).unwrap_or(false) {
                return Err(InvariantViolation::new(
                    "accepted trajectory does not end in Finish",
                ));
            }
        }
        Ok(())
    }
}

/// A broken structural invariant, reported by the pure validators.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invariant violation: {message}")]
pub struct InvariantViolation {
    pub message: String,
}

impl InvariantViolation {
    pub fn new(message: impl Into<String>) -> Self {
        InvariantViolation {
            message: message.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u64, branch: usize, depth: usize, parent: Option<u64>) -> Node {
        Node {
            id,
            branch,
            depth,
            parent,
            thought: format!("thought {id}"),
            action: Action::Search(format!("query {id}")),
            observation: Some(format!("obs {id}")),
            verdict: None,
        }
    }

    #[test]
    fn action_display_round_trips_payload() {
        let a = Action::Finish("Dennis Publishing".to_string());
        assert_eq!(a.to_string(), "Finish[Dennis Publishing]");
        assert_eq!(a.payload(), "Dennis Publishing");
        assert!(a.is_finish());
        assert!(!Action::Search("x".into()).is_finish());
    }

    #[test]
    fn question_difficulty_restricted_to_hotpotqa() {
        let mut q = Question::new("q1", "who?");
        q.difficulty = Some(Difficulty::Hard);
        assert!(q.validate().is_err());
        q.dataset = Dataset::Hotpotqa;
        assert!(q.validate().is_ok());
    }

    #[test]
    fn trajectory_validates_links() {
        let t = Trajectory::new(vec![node(0, 0, 0, None), node(1, 0, 1, Some(0))]);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn trajectory_rejects_depth_gap() {
        let t = Trajectory::new(vec![node(0, 0, 0, None), node(1, 0, 2, Some(0))]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn trajectory_rejects_branch_crossing() {
        let t = Trajectory::new(vec![node(0, 0, 0, None), node(1, 1, 1, Some(0))]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn trajectory_rejects_parent_mismatch() {
        let t = Trajectory::new(vec![node(0, 0, 0, None), node(2, 0, 1, Some(7))]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn trajectory_rejects_empty_and_nonzero_start() {
        assert!(Trajectory::default().validate().is_err());
        let t = Trajectory::new(vec![node(3, 0, 1, Some(0))]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn digest_formats_lines_and_truncates_observations() {
        let mut n0 = node(0, 0, 0, None);
        n0.observation = Some("x".repeat(500));
        let mut n1 = node(1, 0, 1, Some(0));
        n1.observation = None;
        let t = Trajectory::new(vec![n0, n1]);
        let d = t.digest();
        let lines: Vec<&str> = d.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("Thought: "));
        assert!(lines[1].starts_with("Action: Search["));
        assert_eq!(lines[2].len(), "Obs: ".len() + DIGEST_OBSERVATION_LIMIT);
        assert!(lines[3].starts_with("Thought: "));
        assert!(lines[4].starts_with("Action: "));
    }

    #[test]
    fn outcome_validation_ties_answer_to_status() {
        let ok = SearchOutcome {
            status: SearchStatus::Exhausted,
            answer: None,
            accepted_trajectory: None,
            errors: vec![],
            stats: SearchStats::default(),
        };
        assert!(ok.validate().is_ok());

        let bad = SearchOutcome {
            status: SearchStatus::Exhausted,
            answer: Some("x".into()),
            accepted_trajectory: None,
            errors: vec![],
            stats: SearchStats::default(),
        };
        assert!(bad.validate().is_err());

        let mut finish = node(1, 0, 1, Some(0));
        finish.action = Action::Finish("a".into());
        finish.observation = None;
        let solved = SearchOutcome {
            status: SearchStatus::Solved,
            answer: Some("a".into()),
            accepted_trajectory: Some(Trajectory::new(vec![node(0, 0, 0, None), finish])),
            errors: vec![],
            stats: SearchStats::default(),
        };
        assert!(solved.validate().is_ok());
    }

    #[test]
    fn serde_round_trip_core_types() {
        let n = node(4, 1, 2, Some(3));
        let json = serde_json::to_string(&n).unwrap();
        assert_eq!(serde_json::from_str::<Node>(&json).unwrap(), n);

        let v = FeasibilityVerdict::new(Feasibility::Maybe, "plausible");
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<FeasibilityVerdict>(&json).unwrap(), v);
        assert!(json.contains("\"maybe\""));

        let r = ErrorRecord {
            branch: 0,
            rejected_answer: "Fortean Times".into(),
            rationale: "names a magazine, not a company".into(),
            trajectory_digest: "Thought: t\nAction: Finish[x]".into(),
        };
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<ErrorRecord>(&json).unwrap(), r);
    }
}
