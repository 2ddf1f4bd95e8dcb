//! Shared constants and helpers for the CLI integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

/// The two-hop demo question answered by the checked-in cassette.
pub const DEMO_QUESTION: &str =
    "Which company publishes both Bizarre magazine and the magazine inspired by the work of Charles Fort?";

pub const DEMO_ANSWER: &str = "Dennis Publishing";

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn demo_corpus() -> PathBuf {
    fixture("demo/corpus.json")
}

pub fn demo_cassette() -> PathBuf {
    fixture("demo/cassette.jsonl")
}
