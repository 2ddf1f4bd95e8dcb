//! Answer scoring: normalization, token-level F1, and exact match, matching
//! the official HotpotQA evaluation behavior (verified against an
//! independently generated fixture in tests/metric_parity.rs).

use crate::types::Dataset;
use regex::Regex;
use std::sync::OnceLock;

/// Scores answers that are exactly one of these, against a differing
/// counterpart, as zero regardless of token overlap. This mirrors the
/// official evaluator, which treats short verdict answers as all-or-nothing.
const VERDICT_ANSWERS: [&str; 3] = ["yes", "no", "noanswer"];

fn article_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(a|an|the)\b").expect("static pattern"))
}

/// Canonicalizes an answer: lowercase, strip ASCII punctuation, drop the
/// articles "a"/"an"/"the" as whole words, collapse whitespace. Idempotent.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    let no_articles = article_pattern().replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct F1Breakdown {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

impl F1Breakdown {
    const ZERO: F1Breakdown = F1Breakdown {
        f1: 0.0,
        precision: 0.0,
        recall: 0.0,
    };

    const ONE: F1Breakdown = F1Breakdown {
        f1: 1.0,
        precision: 1.0,
        recall: 1.0,
    };
}

/// Token-level multiset F1 over normalized answers.
///
/// Edge rules: if either normalized side is exactly a verdict word
/// ("yes"/"no"/"noanswer") and the sides differ, the score is zero. If both
/// sides normalize to empty, the score is 1 when the normalized strings are
/// equal (vacuously true) and the raw pair is judged by that equality; if
/// only one side is empty, the score is zero.
pub fn f1_score(predicted: &str, gold: &str) -> F1Breakdown {
    let norm_pred = normalize_answer(predicted);
    let norm_gold = normalize_answer(gold);

    if VERDICT_ANSWERS.contains(&norm_pred.as_str()) && norm_pred != norm_gold {
        return F1Breakdown::ZERO;
    }
    if VERDICT_ANSWERS.contains(&norm_gold.as_str()) && norm_pred != norm_gold {
        return F1Breakdown::ZERO;
    }

    let pred_tokens: Vec<&str> = norm_pred.split_whitespace().collect();
    let gold_tokens: Vec<&str> = norm_gold.split_whitespace().collect();

    if pred_tokens.is_empty() && gold_tokens.is_empty() {
        // Both sides vanished under normalization; equality of the
        // normalized strings (both "") decides.
        return if norm_pred == norm_gold {
            F1Breakdown::ONE
        } else {
            F1Breakdown::ZERO
        };
    }
    if pred_tokens.is_empty() || gold_tokens.is_empty() {
        return F1Breakdown::ZERO;
    }

    let mut gold_counts = std::collections::BTreeMap::new();
    for t in &gold_tokens {
        *gold_counts.entry(*t).or_insert(0u64) += 1;
    }
    let mut overlap = 0u64;
    for t in &pred_tokens {
        if let Some(count) = gold_counts.get_mut(*t) {
            if *count > 0 {
                *count -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return F1Breakdown::ZERO;
    }
    let precision = overlap as f64 / pred_tokens.len() as f64;
    let recall = overlap as f64 / gold_tokens.len() as f64;
    F1Breakdown {
        f1: 2.0 * precision * recall / (precision + recall),
        precision,
        recall,
    }
}

/// Equality of normalized answers.
pub fn exact_match(predicted: &str, gold: &str) -> bool {
    normalize_answer(predicted) == normalize_answer(gold)
}

/// Exact match with dataset-specific prediction canonicalization. StrategyQA
/// answers are binary, so a prediction is first mapped to "yes"/"no" by its
/// leading normalized token; predictions that start with neither score false.
pub fn exact_match_tagged(dataset: Dataset, predicted: &str, gold: &str) -> bool {
    match dataset {
        Dataset::Strategyqa => {
            let norm = normalize_answer(predicted);
            match norm.split_whitespace().next() {
                Some(lead @ ("yes" | "no")) => lead == normalize_answer(gold),
                _ => false,
            }
        }
        _ => exact_match(predicted, gold),
    }
}
