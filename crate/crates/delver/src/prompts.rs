//! Versioned prompt assets and the builders that assemble them into chat
//! messages. Builders are deterministic: the same inputs always produce the
//! same messages, which keeps request digests stable across runs.

use crate::gateway::ChatMessage;
use crate::types::{Dataset, ErrorRecord, Node, Question};

pub const EXTRACTION_TEMPLATE: &str = include_str!("../assets/prompts/extract_entities.txt");
pub const ANSWER_EVAL_TEMPLATE: &str = include_str!("../assets/prompts/answer_eval.txt");
pub const STEP_EVAL_TEMPLATE: &str = include_str!("../assets/prompts/step_eval.txt");
pub const GENERATION_ERROR_HEADER: &str =
    include_str!("../assets/prompts/generation_error_header.txt");
pub const GENERATION_SIBLING_HEADER: &str =
    include_str!("../assets/prompts/generation_sibling_header.txt");
pub const WIKI_GENERATION_GUIDE: &str = include_str!("../assets/prompts/generation_guide_wiki.txt");
pub const GAME24_GENERATION_GUIDE: &str =
    include_str!("../assets/prompts/generation_guide_game24.txt");

/// Default generation guide (instructions plus few-shot walkthroughs) for a
/// dataset. Callers can substitute their own guide text.
pub fn generation_guide(dataset: Dataset) -> &'static str {
    match dataset {
        Dataset::Game24 => GAME24_GENERATION_GUIDE,
        _ => WIKI_GENERATION_GUIDE,
    }
}

pub fn extraction_messages(question: &Question) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(EXTRACTION_TEMPLATE.trim_end()),
        ChatMessage::user(format!("Question: {}", question.text)),
    ]
}

pub fn answer_eval_messages(question: &Question, answer: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(ANSWER_EVAL_TEMPLATE.trim_end()),
        ChatMessage::user(format!(
            "Question: {}\nGet_answer: {}",
            question.text, answer
        )),
    ]
}

pub fn step_eval_messages(question: &Question, trajectory: &[Node]) -> Vec<ChatMessage> {
    let mut user = format!("Question: {}\n", question.text);
    user.push_str(&render_trajectory(trajectory));
    vec![
        ChatMessage::system(STEP_EVAL_TEMPLATE.trim_end()),
        ChatMessage::user(user),
    ]
}

/// One entry of the "Existing nodes" block: a sibling produced earlier in the
/// same expansion (no observation yet) or, with cross-branch feedback on, an
/// already-executed same-depth node.
#[derive(Debug, Clone, PartialEq)]
pub struct SiblingEntry {
    pub thought: String,
    pub action: String,
    pub observation: Option<String>,
}

pub fn generation_messages(
    guide: &str,
    question: &Question,
    errors: &[ErrorRecord],
    prefix: &[Node],
    siblings: &[SiblingEntry],
) -> Vec<ChatMessage> {
    let mut user = String::new();
    if !errors.is_empty() {
        user.push_str(GENERATION_ERROR_HEADER.trim_end());
        user.push('\n');
        for record in errors {
            user.push_str(&format!(
                "Results: {}, Thought: {}\n",
                record.rejected_answer, record.rationale
            ));
            if !record.trajectory_digest.is_empty() {
                user.push_str("Previous attempt:\n");
                user.push_str(&record.trajectory_digest);
                user.push('\n');
            }
        }
        user.push('\n');
    }
    user.push_str(&format!("Question: {}\n", question.text));
    user.push_str(&render_trajectory(prefix));
    if !siblings.is_empty() {
        user.push('\n');
        user.push_str(GENERATION_SIBLING_HEADER.trim_end());
        user.push('\n');
        for sib in siblings {
            user.push_str(&format!("Thought: {}\nAction: {}\n", sib.thought, sib.action));
            if let Some(obs) = &sib.observation {
                user.push_str(&format!("Obs: {obs}\n"));
            }
        }
    }
    user.push_str("\nGenerate the next Thought and Action.");
    vec![ChatMessage::system(guide.trim_end()), ChatMessage::user(user)]
}

/// Renders nodes as the Thought/Action/Obs line groups used across prompts.
pub fn render_trajectory(nodes: &[Node]) -> String {
    let mut out = String::new();
    for node in nodes {
        out.push_str(&format!("Thought: {}\nAction: {}\n", node.thought, node.action));
        if let Some(obs) = &node.observation {
            out.push_str(&format!("Obs: {obs}\n"));
        }
    }
    out
}
