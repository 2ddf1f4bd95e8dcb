//! Step feasibility evaluation (with frontier ranking) and final-answer
//! verification. Both are prompt-based with tolerant, total parsers.
//!
//! Failure postures differ on purpose: a lost step verdict must not kill
//! exploration (fail open to `maybe`), while an unverifiable final answer
//! must never be reported as solved (fail closed to off-topic).

use crate::gateway::{CallMeter, Gateway, MeterError};
use crate::prompts::{answer_eval_messages, step_eval_messages};
use crate::types::{AnswerVerdict, Feasibility, FeasibilityVerdict, Node, Question};

/// Rationale used when the step evaluator's reply cannot be parsed.
pub const UNPARSEABLE_STEP_RATIONALE: &str = "evaluator output unparseable";
/// Rationale used when the answer evaluator's reply cannot be parsed.
pub const UNPARSEABLE_JUDGMENT_RATIONALE: &str = "judgment unparseable";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictParseError {
    /// No standalone sure/maybe/impossible token anywhere in the reply.
    NoCategoryToken,
    /// No standalone YES/NO token after a `JUDGMENT:` marker.
    NoJudgmentToken,
}

impl std::fmt::Display for VerdictParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerdictParseError::NoCategoryToken => write!(f, "no_category_token"),
            VerdictParseError::NoJudgmentToken => write!(f, "no_judgment_token"),
        }
    }
}

impl std::error::Error for VerdictParseError {}

/// Words are maximal runs of ASCII alphanumerics; everything else separates.
fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
}

fn first_category(text: &str) -> Option<Feasibility> {
    words(text).find_map(|w| {
        if w.eq_ignore_ascii_case("sure") {
            Some(Feasibility::Sure)
        } else if w.eq_ignore_ascii_case("maybe") {
            Some(Feasibility::Maybe)
        } else if w.eq_ignore_ascii_case("impossible") {
            Some(Feasibility::Impossible)
        } else {
            None
        }
    })
}

/// Case-insensitive search for `marker`, returning the text after it.
fn after_marker<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    let lower = text.to_lowercase();
    let at = lower.find(&marker.to_lowercase())?;
    Some(&text[at + marker.len()..])
}

/// Reads a feasibility verdict from a model reply.
///
/// The category comes from the first standalone sure/maybe/impossible token
/// after a `CATEGORY:` marker, or anywhere in the reply when the marker is
/// absent, so terse replies like "impossible — entity does not exist" still
/// parse. The rationale is the `ANALYSIS:` block when present, otherwise the
/// whole reply.
pub fn parse_step_verdict(raw: &str) -> Result<FeasibilityVerdict, VerdictParseError> {
    let category = after_marker(raw, "category:")
        .and_then(first_category)
        .or_else(|| first_category(raw))
        .ok_or(VerdictParseError::NoCategoryToken)?;
    let rationale = match after_marker(raw, "analysis:") {
        Some(rest) => {
            let upto = rest
                .to_lowercase()
                .find("category:")
                .unwrap_or(rest.len());
            rest[..upto].trim().to_string()
        }
        None => raw.trim().to_string(),
    };
    let rationale = if rationale.is_empty() {
        raw.trim().to_string()
    } else {
        rationale
    };
    Ok(FeasibilityVerdict::new(category, rationale))
}

/// Reads an on-topic judgment from a model reply: the first standalone YES or
/// NO token after `JUDGMENT:`, with the `THOUGHT:` block (up to the judgment
/// marker) as rationale. The thought is optional; the judgment is not.
pub fn parse_judgment(raw: &str) -> Result<AnswerVerdict, VerdictParseError> {
    let after = after_marker(raw, "judgment:").ok_or(VerdictParseError::NoJudgmentToken)?;
    let on_topic = words(after)
        .find_map(|w| {
            if w.eq_ignore_ascii_case("yes") {
                Some(true)
            } else if w.eq_ignore_ascii_case("no") {
                Some(false)
            } else {
                None
            }
        })
        .ok_or(VerdictParseError::NoJudgmentToken)?;
    let rationale = match after_marker(raw, "thought:") {
        Some(rest) => {
            let upto = rest
                .to_lowercase()
                .find("judgment:")
                .unwrap_or(rest.len());
            rest[..upto].trim().to_string()
        }
        None => String::new(),
    };
    Ok(AnswerVerdict {
        on_topic,
        rationale,
    })
}

/// Orders a frontier for expansion: sure first, then maybe, impossible
/// dropped. A stable partition — within a category the input order (which is
/// generation order) is preserved.
pub fn rank_frontier<T>(items: Vec<(T, Feasibility)>) -> Vec<T> {
    let mut sure = Vec::new();
    let mut maybe = Vec::new();
    for (item, category) in items {
        match category {
            Feasibility::Sure => sure.push(item),
            Feasibility::Maybe => maybe.push(item),
            Feasibility::Impossible => {}
        }
    }
    sure.append(&mut maybe);
    sure
}

/// Judges whether a partial trajectory can still reach an answer.
pub trait StepJudge {
    fn evaluate_step(
        &self,
        question: &Question,
        trajectory: &[Node],
        meter: &mut CallMeter,
    ) -> Result<FeasibilityVerdict, MeterError>;
}

/// Judges whether a proposed final answer actually addresses the question.
pub trait AnswerJudge {
    fn evaluate_answer(
        &self,
        question: &Question,
        answer: &str,
        trajectory: &[Node],
        meter: &mut CallMeter,
    ) -> Result<AnswerVerdict, MeterError>;
}

pub struct LlmStepJudge<'a> {
    gateway: &'a Gateway,
    temperature: f64,
    retries: u32,
}

impl<'a> LlmStepJudge<'a> {
    pub fn new(gateway: &'a Gateway, temperature: f64, retries: u32) -> Self {
        Self {
            gateway,
            temperature,
            retries,
        }
    }
}

impl StepJudge for LlmStepJudge<'_> {
    fn evaluate_step(
        &self,
        question: &Question,
        trajectory: &[Node],
        meter: &mut CallMeter,
    ) -> Result<FeasibilityVerdict, MeterError> {
        let messages = step_eval_messages(question, trajectory);
        for _ in 0..=self.retries {
            let request = self.gateway.request(self.temperature, messages.clone());
            let response = meter.complete(self.gateway, &request)?;
            if let Ok(verdict) = parse_step_verdict(&response.content) {
                return Ok(verdict);
            }
        }
        // Fail open: an unreadable verdict must not prune the node.
        Ok(FeasibilityVerdict::new(
            Feasibility::Maybe,
            UNPARSEABLE_STEP_RATIONALE,
        ))
    }
}

pub struct LlmAnswerJudge<'a> {
    gateway: &'a Gateway,
    temperature: f64,
    retries: u32,
}

impl<'a> LlmAnswerJudge<'a> {
    pub fn new(gateway: &'a Gateway, temperature: f64, retries: u32) -> Self {
        Self {
            gateway,
            temperature,
            retries,
        }
    }
}

impl AnswerJudge for LlmAnswerJudge<'_> {
    fn evaluate_answer(
        &self,
        question: &Question,
        answer: &str,
        _trajectory: &[Node],
        meter: &mut CallMeter,
    ) -> Result<AnswerVerdict, MeterError> {
        let messages = answer_eval_messages(question, answer);
        for _ in 0..=self.retries {
            let request = self.gateway.request(self.temperature, messages.clone());
            let response = meter.complete(self.gateway, &request)?;
            if let Ok(verdict) = parse_judgment(&response.content) {
                return Ok(verdict);
            }
        }
        // Fail closed: an unverifiable answer is never reported as solved.
        Ok(AnswerVerdict {
            on_topic: false,
            rationale: UNPARSEABLE_JUDGMENT_RATIONALE.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Gateway;

    #[test]
    fn verdict_reads_analysis_and_category() {
        let v = parse_step_verdict("ANALYSIS: the observation names the object.\nCATEGORY: sure")
            .unwrap();
        assert_eq!(v.category, Feasibility::Sure);
        assert_eq!(v.rationale, "the observation names the object.");
    }

    #[test]
    fn bare_category_token_parses() {
        let v = parse_step_verdict("impossible — entity does not exist").unwrap();
        assert_eq!(v.category, Feasibility::Impossible);
        assert_eq!(v.rationale, "impossible — entity does not exist");
    }

    #[test]
    fn embedded_token_without_marker_parses() {
        let v = parse_step_verdict("This step is maybe worth trying.").unwrap();
        assert_eq!(v.category, Feasibility::Maybe);
    }

    #[test]
    fn category_tokens_do_not_match_inside_words() {
        assert_eq!(
            parse_step_verdict("sureness and impossibility abound"),
            Err(VerdictParseError::NoCategoryToken)
        );
    }

    #[test]
    fn marker_takes_precedence_over_earlier_tokens() {
        let v = parse_step_verdict("I was sure at first.\nCATEGORY: impossible").unwrap();
        assert_eq!(v.category, Feasibility::Impossible);
    }

    #[test]
    fn unreadable_marker_falls_back_to_whole_text() {
        let v = parse_step_verdict("sure thing.\nCATEGORY: dunno").unwrap();
        assert_eq!(v.category, Feasibility::Sure);
    }

    #[test]
    fn ranking_is_a_stable_partition() {
        let input = vec![
            ("maybe1", Feasibility::Maybe),
            ("sure2", Feasibility::Sure),
            ("impossible3", Feasibility::Impossible),
            ("sure4", Feasibility::Sure),
        ];
        assert_eq!(rank_frontier(input), vec!["sure2", "sure4", "maybe1"]);

        let all_impossible = vec![
            ("a", Feasibility::Impossible),
            ("b", Feasibility::Impossible),
        ];
        assert_eq!(rank_frontier(all_impossible), Vec::<&str>::new());

        let same = vec![
            ("a", Feasibility::Maybe),
            ("b", Feasibility::Maybe),
            ("c", Feasibility::Maybe),
        ];
        assert_eq!(rank_frontier(same), vec!["a", "b", "c"]);
    }

    #[test]
    fn judgment_parses_thought_and_token() {
        let v = parse_judgment("THOUGHT: fits.\nJUDGMENT: YES").unwrap();
        assert!(v.on_topic);
        assert_eq!(v.rationale, "fits.");
    }

    #[test]
    fn judgment_thought_is_optional() {
        let v = parse_judgment("JUDGMENT: NO").unwrap();
        assert!(!v.on_topic);
        assert_eq!(v.rationale, "");
    }

    #[test]
    fn prose_without_marker_fails() {
        assert_eq!(
            parse_judgment("I think yes"),
            Err(VerdictParseError::NoJudgmentToken)
        );
        assert_eq!(
            parse_judgment("JUDGMENT: cannot tell"),
            Err(VerdictParseError::NoJudgmentToken)
        );
    }

    #[test]
    fn judgment_is_case_insensitive_and_skips_filler() {
        let v = parse_judgment("judgment: the answer is, I believe, no").unwrap();
        assert!(!v.on_topic);
    }

    fn q() -> Question {
        Question::new("q1", "Which company published Bizarre magazine?")
    }

    fn prefix() -> Vec<Node> {
        vec![Node {
            id: 0,
            branch: 0,
            depth: 0,
            parent: None,
            thought: "Start from entity Charles Fort".into(),
            action: crate::types::Action::Search("Charles Fort".into()),
            observation: Some("Charles Fort was a writer.".into()),
            verdict: None,
        }]
    }

    #[test]
    fn step_judge_returns_scripted_verdict() {
        let gw = Gateway::scripted_queue(["ANALYSIS: promising.\nCATEGORY: sure"], "m");
        let mut meter = CallMeter::new(5);
        let judge = LlmStepJudge::new(&gw, 0.7, 2);
        let v = judge.evaluate_step(&q(), &prefix(), &mut meter).unwrap();
        assert_eq!(v.category, Feasibility::Sure);
        assert_eq!(v.rationale, "promising.");
        assert_eq!(meter.llm_calls, 1);
    }

    #[test]
    fn step_judge_fails_open_after_retries() {
        let gw = Gateway::scripted_queue(["???", "???", "???"], "m");
        let mut meter = CallMeter::new(5);
        let judge = LlmStepJudge::new(&gw, 0.7, 2);
        let v = judge.evaluate_step(&q(), &prefix(), &mut meter).unwrap();
        assert_eq!(v.category, Feasibility::Maybe);
        assert_eq!(v.rationale, UNPARSEABLE_STEP_RATIONALE);
        assert_eq!(meter.llm_calls, 3);
    }

    #[test]
    fn step_judge_propagates_budget() {
        let gw = Gateway::scripted_queue(["???", "???"], "m");
        let mut meter = CallMeter::new(1);
        let judge = LlmStepJudge::new(&gw, 0.7, 2);
        let err = judge.evaluate_step(&q(), &prefix(), &mut meter).unwrap_err();
        assert!(matches!(err, MeterError::BudgetExhausted { calls: 1 }));
    }

    #[test]
    fn answer_judge_accepts_yes() {
        let gw = Gateway::scripted_queue(["THOUGHT: names the publisher.\nJUDGMENT: YES"], "m");
        let mut meter = CallMeter::new(5);
        let judge = LlmAnswerJudge::new(&gw, 0.7, 2);
        let v = judge
            .evaluate_answer(&q(), "Dennis Publishing", &prefix(), &mut meter)
            .unwrap();
        assert!(v.on_topic);
        assert_eq!(v.rationale, "names the publisher.");
    }

    #[test]
    fn answer_judge_fails_closed_after_retries() {
        let gw = Gateway::scripted_queue(["???", "???"], "m");
        let mut meter = CallMeter::new(5);
        let judge = LlmAnswerJudge::new(&gw, 0.7, 1);
        let v = judge
            .evaluate_answer(&q(), "Fortean Times", &prefix(), &mut meter)
            .unwrap();
        assert!(!v.on_topic);
        assert_eq!(v.rationale, UNPARSEABLE_JUDGMENT_RATIONALE);
        assert_eq!(meter.llm_calls, 2);
    }
}
