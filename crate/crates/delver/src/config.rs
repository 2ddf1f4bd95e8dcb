//! Search configuration and its validation.

use serde::{Deserialize, Serialize};

/// Tunables for one search run. Every field has a default, so a config can be
/// deserialized from `{}` or built with `SearchConfig::default()` and then
/// selectively overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Maximum children generated per expansion.
    pub k: usize,
    /// Maximum layers per branch; a node at this depth is never expanded.
    pub max_depth: usize,
    /// Cap on entity branches; `None` explores every extracted entity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_branches: Option<usize>,
    /// Sampling temperature for every model call.
    pub temperature: f64,
    /// Hard ceiling on model calls per search run.
    pub llm_call_budget: u64,
    /// Re-prompts allowed when model output fails to parse.
    pub retries: u32,
    pub extractor_enabled: bool,
    pub step_eval_enabled: bool,
    pub answer_eval_enabled: bool,
    /// When set, generation prompts also list earlier same-depth nodes from
    /// other branches alongside the current expansion's siblings.
    pub cross_branch_sibling_feedback: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: 3,
            max_depth: 8,
            max_branches: None,
            temperature: 0.7,
            llm_call_budget: 60,
            retries: 2,
            extractor_enabled: true,
            step_eval_enabled: true,
            answer_eval_enabled: true,
            cross_branch_sibling_feedback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError {
            field,
            reason: reason.into(),
        }
    }
}

impl SearchConfig {
    /// Checks every field and returns the config unchanged when it is usable.
    /// Violations name the offending field.
    pub fn validate(self) -> Result<SearchConfig, ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::new("k", "must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(ConfigError::new("max_depth", "must be at least 1"));
        }
        if let Some(b) = self.max_branches {
            if b == 0 {
                return Err(ConfigError::new("max_branches", "must be at least 1 when set"));
            }
        }
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::new(
                "temperature",
                "must be a finite number in [0, 2]",
            ));
        }
        if self.llm_call_budget == 0 {
            return Err(ConfigError::new("llm_call_budget", "must be at least 1"));
        }
        Ok(self)
    }
}
