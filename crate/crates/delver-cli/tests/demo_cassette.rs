//! The checked-in demo cassette: a scripted two-entity search in which the
//! first branch's answer is rejected (a magazine, not a company), the error is
//! fed back, and the second branch recovers the publisher. The regenerator is
//! ignored by default; the validation test replays the committed file.

mod common;

use common::{demo_cassette, demo_corpus, DEMO_ANSWER, DEMO_QUESTION};
use delver::gateway::{CassetteSink, Gateway, ScriptedTransport};
use delver::trace::{MemoryTraceSink, TraceBody};
use delver::types::{Dataset, Question, SearchStatus};
use delver_cli::{resolve_config, solve_question, AppConfig, BackendKind, ConfigOverrides};
use std::collections::BTreeMap;

fn demo_question() -> Question {
    Question {
        id: "question".to_string(),
        text: DEMO_QUESTION.to_string(),
        gold_answer: None,
        difficulty: None,
        dataset: Dataset::Custom,
    }
}

fn demo_app(backend: BackendKind) -> AppConfig {
    let overrides = ConfigOverrides {
        backend: Some(backend),
        cassette: Some(demo_cassette()),
        corpus: Some(demo_corpus()),
        ..ConfigOverrides::default()
    };
    resolve_config(&overrides, &BTreeMap::new()).expect("demo config resolves")
}

/// The model transcript behind the cassette, in exact call order. Slots 4 and
/// 17 are byte-identical to 3 and 15 so the generator's duplicate filter
/// fires; slots 10-12 are three unparseable attempts for one failed slot.
const SCRIPT: [&str; 20] = [
    // 1. Entity extraction.
    "The question pivots on two named things.\n[\"Charles Fort\", \"Bizarre magazine\"]",
    // Branch 0, expansion of the seed (Search[Charles Fort] hit the page).
    "Thought: The question asks which company publishes both Bizarre magazine and the magazine inspired by Charles Fort's work. The page says his work inspired Fortean Times.\nAction: Finish[Fortean Times]",
    "Thought: The magazine inspired by Charles Fort's work is Fortean Times, so the next step is to open its page and find the publisher.\nAction: Search[Fortean Times]",
    "Thought: The magazine inspired by Charles Fort's work is Fortean Times, so the next step is to open its page and find the publisher.\nAction: Search[Fortean Times]",
    // Branch 0 step verdicts: keep the direct answer, prune the re-search.
    "ANALYSIS: The observation directly links Charles Fort's work to Fortean Times, so finishing with it is well grounded.\nCATEGORY: sure",
    "ANALYSIS: Fortean Times is already identified; searching it again repeats the same ground without adding publisher facts.\nCATEGORY: impossible",
    // Branch 0 answer verdict: rejected, recorded as an error.
    "THOUGHT: Fortean Times is itself a magazine, but the question asks for the company that publishes both magazines, so this answer names the wrong kind of thing.\nJUDGMENT: NO",
    // Branch 1, expansion of the seed (Search[Bizarre magazine] missed).
    "Thought: The search missed, but the similar title Bizarre (magazine) is listed, so opening that page should reveal the publisher.\nAction: Search[Bizarre (magazine)]",
    "Thought: The earlier answer Fortean Times was rejected for naming a magazine instead of a company, so the publisher should be read off the Fortean Times page itself.\nAction: Search[Fortean Times]",
    "Searching for the publisher of both magazines seems wise next.",
    "Let me think about which page to open.",
    "The publisher is probably listed on one of the magazine pages.",
    // Branch 1, depth-1 step verdicts.
    "ANALYSIS: The page states outright that Bizarre was published by Dennis Publishing, which also publishes Fortean Times, covering both magazines in the question.\nCATEGORY: sure",
    "ANALYSIS: The Fortean Times page names its publisher, which answers half the question and may corroborate the other half.\nCATEGORY: maybe",
    // Branch 1, expansion of the Bizarre (magazine) node.
    "Thought: The observation states Dennis Publishing publishes both Bizarre and Fortean Times, the magazine inspired by Charles Fort's work, so the company is identified.\nAction: Finish[Dennis Publishing]",
    "Thought: A quick scan for the sentence naming Fortean Times inside this page would confirm the shared publisher before answering.\nAction: Lookup[Fortean Times]",
    "Thought: The observation states Dennis Publishing publishes both Bizarre and Fortean Times, the magazine inspired by Charles Fort's work, so the company is identified.\nAction: Finish[Dennis Publishing]",
    // Branch 1, depth-2 step verdicts.
    "ANALYSIS: Both magazines are tied to Dennis Publishing by the current page, so finishing with the company name is fully supported.\nCATEGORY: sure",
    "ANALYSIS: The lookup merely restates the publisher sentence already observed, adding confirmation but no new facts.\nCATEGORY: maybe",
    // Branch 1 answer verdict: accepted.
    "THOUGHT: Dennis Publishing is a company, and the evidence shows it publishes Bizarre as well as Fortean Times, the magazine inspired by Charles Fort's work, which is exactly what the question asks.\nJUDGMENT: YES",
];

/// Rebuilds tests/fixtures/demo/cassette.jsonl by recording the scripted
/// transcript through the same assembly the CLI uses, so replay digests
/// match. Run manually after changing the script, prompts, or corpus:
/// `cargo test -p delver-cli regenerate_demo_cassette -- --ignored`
#[test]
#[ignore = "rewrites the checked-in cassette fixture"]
fn regenerate_demo_cassette() {
    let app = demo_app(BackendKind::Live);
    let path = demo_cassette();
    let _ = std::fs::remove_file(&path);
    let gateway = Gateway::record(
        ScriptedTransport::queue(SCRIPT),
        CassetteSink::file(&path).expect("cassette file opens"),
        &app.model,
    );
    let mut sink = MemoryTraceSink::default();
    let outcome = solve_question(&app, &demo_question(), false, Some(&gateway), &mut sink)
        .expect("scripted solve succeeds");
    assert_eq!(outcome.status, SearchStatus::Solved);
    assert_eq!(outcome.answer.as_deref(), Some(DEMO_ANSWER));
    assert_eq!(outcome.stats.llm_calls, SCRIPT.len() as u64);
}

/// The committed cassette must replay to the accepted publisher answer, with
/// the first branch's rejection and the pruned/failed slots all present.
#[test]
fn checked_in_cassette_replays_the_demo_run() {
    let app = demo_app(BackendKind::Replay);
    let gateway = delver_cli::build_gateway(&app, None).expect("replay gateway loads");
    let mut sink = MemoryTraceSink::default();
    let outcome = solve_question(&app, &demo_question(), false, Some(&gateway), &mut sink)
        .expect("replayed solve succeeds");
    assert_eq!(outcome.status, SearchStatus::Solved);
    assert_eq!(outcome.answer.as_deref(), Some(DEMO_ANSWER));
    assert_eq!(outcome.stats.llm_calls, SCRIPT.len() as u64);

    let mut rejected = 0;
    let mut error_records = 0;
    let mut pruned_markers = 0;
    let mut duplicate_sum = 0;
    let mut failed_sum = 0;
    for event in &sink.events {
        match &event.body {
            TraceBody::AnswerEval { on_topic, .. } if !on_topic => rejected += 1,
            TraceBody::ErrorRecord { record } => {
                error_records += 1;
                assert_eq!(record.rejected_answer, "Fortean Times");
            }
            TraceBody::StepEval { category, .. }
                if *category == delver::types::Feasibility::Impossible =>
            {
                pruned_markers += 1
            }
            TraceBody::Generate {
                duplicates_discarded,
                failed_slots,
                ..
            } => {
                duplicate_sum += duplicates_discarded;
                failed_sum += failed_slots;
            }
            _ => {}
        }
    }
    assert_eq!(rejected, 1, "exactly one rejected answer");
    assert_eq!(error_records, 1);
    assert_eq!(pruned_markers, 1, "one impossible child pruned");
    assert_eq!(duplicate_sum, 2, "two duplicate slots discarded");
    assert_eq!(failed_sum, 1, "one unparseable slot");

    // Every generation request after the rejection carries the recorded
    // rationale, so later branches steer away from the failed answer.
    let exchanges = delver::gateway::read_cassette(&demo_cassette()).expect("cassette parses");
    let rejection_idx = exchanges
        .iter()
        .position(|e| e.response.content.contains("JUDGMENT: NO"))
        .expect("the rejection is on the cassette");
    let post = &exchanges[rejection_idx + 1..];
    let generations: Vec<_> = post
        .iter()
        .filter(|e| {
            e.request
                .messages
                .iter()
                .any(|m| m.content.contains("Generate the next Thought and Action."))
        })
        .collect();
    assert!(!generations.is_empty());
    for exchange in generations {
        let prompt: String = exchange
            .request
            .messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        assert!(
            prompt.contains("names the wrong kind of thing"),
            "post-rejection generation prompts must quote the error rationale"
        );
    }
}
