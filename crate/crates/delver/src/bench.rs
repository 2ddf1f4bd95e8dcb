//! Dataset loading, batched solving, and report assembly: runs the search
//! over a question set with bounded parallelism, scores answers, aggregates
//! per-difficulty averages, and persists one trace file per question.

use crate::explorer::SolveError;
use crate::metrics::{exact_match_tagged, f1_score};
use crate::trace::{JsonlTraceWriter, TraceSink};
use crate::types::{Dataset, Difficulty, Question, SearchOutcome, SearchStatus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read dataset: {0}")]
    Io(std::io::Error),
    #[error("cannot parse dataset: {0}")]
    Parse(String),
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("benchmark io failure: {0}")]
    Io(std::io::Error),
    #[error("benchmark serialization failure: {0}")]
    Serialize(serde_json::Error),
}

// These errors embed their cause in the message, so they deliberately do not
// expose it as `source()` as well; chain-style printers would repeat it.
impl From<std::io::Error> for LoadError {
    fn from(e: std::io::Error) -> Self {
        LoadError::Io(e)
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e)
    }
}

impl From<serde_json::Error> for BenchError {
    fn from(e: serde_json::Error) -> Self {
        BenchError::Serialize(e)
    }
}

/// A record that failed to load; the index is its position in the source
/// file (array index or line number, zero-based).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SkippedRecord {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub questions: Vec<Question>,
    pub skipped: Vec<SkippedRecord>,
}

fn parse_difficulty(raw: &str) -> Option<Difficulty> {
    match raw.to_ascii_lowercase().as_str() {
        "easy" => Some(Difficulty::Easy),
        "medium" => Some(Difficulty::Medium),
        "hard" => Some(Difficulty::Hard),
        _ => None,
    }
}

/// Loads a dataset file. Malformed records are skipped and reported by
/// index; only unreadable files or top-level parse failures are errors.
pub fn load_dataset(path: &Path, kind: Dataset) -> Result<LoadedDataset, LoadError> {
    let raw = std::fs::read_to_string(path)?;
    match kind {
        Dataset::Hotpotqa => load_hotpotqa(&raw),
        Dataset::Strategyqa => load_strategyqa(&raw),
        Dataset::Game24 => Ok(load_game24(&raw)),
        Dataset::Custom => Err(LoadError::Parse(
            "no loader is defined for the custom dataset kind".to_string(),
        )),
    }
}

fn load_hotpotqa(raw: &str) -> Result<LoadedDataset, LoadError> {
    let records: Vec<serde_json::Value> =
        serde_json::from_str(raw).map_err(|e| LoadError::Parse(e.to_string()))?;
    let mut questions = Vec::new();
    let mut skipped = Vec::new();
    for (index, record) in records.into_iter().enumerate() {
        let Some(obj) = record.as_object() else {
            skipped.push(SkippedRecord {
                index,
                reason: "record is not an object".to_string(),
            });
            continue;
        };
        let Some(text) = obj.get("question").and_then(|v| v.as_str()) else {
            skipped.push(SkippedRecord {
                index,
                reason: "missing string field `question`".to_string(),
            });
            continue;
        };
        let Some(answer) = obj.get("answer").and_then(|v| v.as_str()) else {
            skipped.push(SkippedRecord {
                index,
                reason: "missing string field `answer`".to_string(),
            });
            continue;
        };
        let difficulty = match obj.get("level") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(level)) => match parse_difficulty(level) {
                Some(d) => Some(d),
                None => {
                    skipped.push(SkippedRecord {
                        index,
                        reason: format!("unrecognized level {level:?}"),
                    });
                    continue;
                }
            },
            Some(other) => {
                skipped.push(SkippedRecord {
                    index,
                    reason: format!("level is not a string: {other}"),
                });
                continue;
            }
        };
        let id = obj
            .get("id")
            .or_else(|| obj.get("_id"))
            .and_then(|v| v.as_str())
            .map(String::from)
            .unwrap_or_else(|| format!("hotpotqa-{index}"));
        let mut q = Question::new(id, text);
        q.dataset = Dataset::Hotpotqa;
        q.gold_answer = Some(answer.to_string());
        q.difficulty = difficulty;
        questions.push(q);
    }
    Ok(LoadedDataset { questions, skipped })
}

fn load_strategyqa(raw: &str) -> Result<LoadedDataset, LoadError> {
    let records: Vec<serde_json::Value> =
        serde_json::from_str(raw).map_err(|e| LoadError::Parse(e.to_string()))?;
    let mut questions = Vec::new();
    let mut skipped = Vec::new();
    for (index, record) in records.into_iter().enumerate() {
        let Some(obj) = record.as_object() else {
            skipped.push(SkippedRecord {
                index,
                reason: "record is not an object".to_string(),
            });
            continue;
        };
        let Some(text) = obj.get("question").and_then(|v| v.as_str()) else {
            skipped.push(SkippedRecord {
                index,
                reason: "missing string field `question`".to_string(),
            });
            continue;
        };
        let Some(answer) = obj.get("answer").and_then(|v| v.as_bool()) else {
            skipped.push(SkippedRecord {
                index,
                reason: "missing boolean field `answer`".to_string(),
            });
            continue;
        };
        let id = obj
            .get("id")
            .or_else(|| obj.get("qid"))
            .and_then(|v| v.as_str())
            .map(String::from)
            .unwrap_or_else(|| format!("strategyqa-{index}"));
        let mut q = Question::new(id, text);
        q.dataset = Dataset::Strategyqa;
        q.gold_answer = Some(if answer { "yes" } else { "no" }.to_string());
        questions.push(q);
    }
    Ok(LoadedDataset { questions, skipped })
}

fn load_game24(raw: &str) -> LoadedDataset {
    let mut questions = Vec::new();
    let mut skipped = Vec::new();
    for (index, line) in raw.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed: Result<Vec<i64>, _> =
            trimmed.split_whitespace().map(str::parse::<i64>).collect();
        match parsed {
            Ok(numbers) if numbers.len() == 4 => {
                let text = numbers
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                let mut q = Question::new(format!("game24-{index}"), text);
                q.dataset = Dataset::Game24;
                questions.push(q);
            }
            Ok(numbers) => skipped.push(SkippedRecord {
                index,
                reason: format!("expected 4 integers, found {}", numbers.len()),
            }),
            Err(e) => skipped.push(SkippedRecord {
                index,
                reason: format!("non-integer token: {e}"),
            }),
        }
    }
    LoadedDataset { questions, skipped }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QuestionResult {
    pub question_id: String,
    pub difficulty: Option<Difficulty>,
    pub status: SearchStatus,
    pub answer: Option<String>,
    pub f1: f64,
    pub em: bool,
    pub llm_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct QuestionFailure {
    pub question_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DifficultyAggregate {
    pub count: usize,
    pub mean_f1: f64,
    pub mean_em: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Aggregates {
    pub mean_f1: f64,
    pub mean_em: f64,
    pub per_difficulty: BTreeMap<String, DifficultyAggregate>,
    pub mean_tokens_per_task: f64,
    pub mean_wall_time_ms: f64,
    pub total_prompt_tokens: u64,
    pub total_completion_tokens: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub schema_version: u32,
    pub run_id: String,
    pub dataset: Dataset,
    pub total_questions: usize,
    pub solved: usize,
    pub rows: Vec<QuestionResult>,
    pub failures: Vec<QuestionFailure>,
    pub skipped_records: Vec<SkippedRecord>,
    pub aggregates: Aggregates,
}

/// Where run_benchmark persisted its outputs.
#[derive(Debug, Clone)]
pub struct BenchArtifacts {
    pub report: Report,
    pub report_path: PathBuf,
    pub table_path: PathBuf,
    pub trace_dir: PathBuf,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn score_question(question: &Question, outcome: &SearchOutcome) -> (f64, bool) {
    let predicted = outcome.answer.as_deref().unwrap_or("");
    match question.dataset {
        // Game-of-24 lines have no gold text; the answer judge already
        // verified arithmetic, so a solved run scores 1 outright.
        Dataset::Game24 => {
            let hit = outcome.status == SearchStatus::Solved;
            (if hit { 1.0 } else { 0.0 }, hit)
        }
        _ => match &question.gold_answer {
            Some(gold) => (
                f1_score(predicted, gold).f1,
                exact_match_tagged(question.dataset, predicted, gold),
            ),
            None => (0.0, false),
        },
    }
}

fn difficulty_key(d: Option<Difficulty>) -> String {
    match d {
        Some(d) => d.to_string(),
        None => "unknown".to_string(),
    }
}

/// Makes a question id safe to use as a file name.
pub fn sanitize_for_path(id: &str) -> String {
    let cleaned: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "question".to_string()
    } else {
        cleaned
    }
}

enum Slot {
    Row(Box<QuestionResult>),
    Failure(QuestionFailure),
}

/// Solves every question with up to `parallelism` worker threads, writing one
/// trace file per question under `out_dir/traces/<run_id>/`, then assembles
/// the report, its JSON file, and a human-readable table. Individual solve
/// errors are recorded in the report; the run itself still completes.
pub fn run_benchmark<F>(
    run_id: &str,
    dataset: Dataset,
    questions: &[Question],
    skipped_records: Vec<SkippedRecord>,
    parallelism: usize,
    out_dir: &Path,
    solve: F,
) -> Result<BenchArtifacts, BenchError>
where
    F: Fn(&Question, &mut dyn TraceSink) -> Result<SearchOutcome, SolveError> + Sync,
{
    let run_id_path = sanitize_for_path(run_id);
    let trace_dir = out_dir.join("traces").join(&run_id_path);
    std::fs::create_dir_all(&trace_dir)?;

    let workers = parallelism.max(1).min(questions.len().max(1));
    let next: AtomicUsize = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Slot>>> = Mutex::new((0..questions.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= questions.len() {
                    break;
                }
                let question = &questions[index];
                let slot = solve_one(question, &trace_dir, &solve);
                slots.lock().unwrap()[index] = Some(slot);
            });
        }
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for slot in slots.into_inner().unwrap() {
        match slot.expect("every question produces a slot") {
            Slot::Row(row) => rows.push(*row),
            Slot::Failure(f) => failures.push(f),
        }
    }

    let solved = rows
        .iter()
        .filter(|r| r.status == SearchStatus::Solved)
        .count();
    let mut per_difficulty = BTreeMap::new();
    for key in rows.iter().map(|r| difficulty_key(r.difficulty)) {
        per_difficulty.entry(key).or_insert(DifficultyAggregate {
            count: 0,
            mean_f1: 0.0,
            mean_em: 0.0,
        });
    }
    for (key, agg) in per_difficulty.iter_mut() {
        let bucket: Vec<&QuestionResult> = rows
            .iter()
            .filter(|r| difficulty_key(r.difficulty) == *key)
            .collect();
        agg.count = bucket.len();
        agg.mean_f1 = mean(bucket.iter().map(|r| r.f1));
        agg.mean_em = mean(bucket.iter().map(|r| if r.em { 1.0 } else { 0.0 }));
    }
    let aggregates = Aggregates {
        mean_f1: mean(rows.iter().map(|r| r.f1)),
        mean_em: mean(rows.iter().map(|r| if r.em { 1.0 } else { 0.0 })),
        per_difficulty,
        mean_tokens_per_task: mean(
            rows.iter()
                .map(|r| (r.prompt_tokens + r.completion_tokens) as f64),
        ),
        mean_wall_time_ms: mean(rows.iter().map(|r| r.wall_time_ms as f64)),
        total_prompt_tokens: rows.iter().map(|r| r.prompt_tokens).sum(),
        total_completion_tokens: rows.iter().map(|r| r.completion_tokens).sum(),
    };

    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        run_id: run_id.to_string(),
        dataset,
        total_questions: questions.len(),
        solved,
        rows,
        failures,
        skipped_records,
        aggregates,
    };

    let report_path = out_dir.join(format!("report-{run_id_path}.json"));
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    let table_path = out_dir.join(format!("report-{run_id_path}.txt"));
    std::fs::write(&table_path, render_table(&report))?;

    Ok(BenchArtifacts {
        report,
        report_path,
        table_path,
        trace_dir,
    })
}

fn solve_one<F>(question: &Question, trace_dir: &Path, solve: &F) -> Slot
where
    F: Fn(&Question, &mut dyn TraceSink) -> Result<SearchOutcome, SolveError> + Sync,
{
    let trace_path = trace_dir.join(format!("{}.jsonl", sanitize_for_path(&question.id)));
    let mut writer = match JsonlTraceWriter::create(&trace_path) {
        Ok(w) => w,
        Err(e) => {
            return Slot::Failure(QuestionFailure {
                question_id: question.id.clone(),
                error: format!("cannot create trace file: {e}"),
            })
        }
    };
    let result = solve(question, &mut writer);
    if let Err(e) = writer.finish() {
        return Slot::Failure(QuestionFailure {
            question_id: question.id.clone(),
            error: format!("cannot flush trace file: {e}"),
        });
    }
    match result {
        Ok(outcome) => {
            let (f1, em) = score_question(question, &outcome);
            Slot::Row(Box::new(QuestionResult {
                question_id: question.id.clone(),
                difficulty: question.difficulty,
                status: outcome.status,
                answer: outcome.answer,
                f1,
                em,
                llm_calls: outcome.stats.llm_calls,
                prompt_tokens: outcome.stats.prompt_tokens,
                completion_tokens: outcome.stats.completion_tokens,
                wall_time_ms: outcome.stats.wall_time_ms,
            }))
        }
        Err(e) => Slot::Failure(QuestionFailure {
            question_id: question.id.clone(),
            error: e.to_string(),
        }),
    }
}

/// Renders the per-difficulty summary with columns in easy, medium, hard,
/// average order, followed by cost lines and any failures.
pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "run {} | dataset {} | {} questions, {} solved, {} failed, {} records skipped",
        report.run_id,
        report.dataset,
        report.total_questions,
        report.solved,
        report.failures.len(),
        report.skipped_records.len()
    );
    let lookup = |key: &str| report.aggregates.per_difficulty.get(key);
    let fmt_cell = |agg: Option<&DifficultyAggregate>, pick: &dyn Fn(&DifficultyAggregate) -> f64| {
        match agg {
            Some(a) if a.count > 0 => format!("{:>7.2}", pick(a) * 100.0),
            _ => format!("{:>7}", "-"),
        }
    };
    let _ = writeln!(
        out,
        "{:<8}{:>7}{:>8}{:>7}{:>9}",
        "metric", "easy", "medium", "hard", "average"
    );
    let _ = writeln!(
        out,
        "{:<8}{}{}{}{:>9.2}",
        "f1",
        fmt_cell(lookup("easy"), &|a| a.mean_f1),
        format!(" {}", fmt_cell(lookup("medium"), &|a| a.mean_f1)),
        fmt_cell(lookup("hard"), &|a| a.mean_f1),
        report.aggregates.mean_f1 * 100.0
    );
    let _ = writeln!(
        out,
        "{:<8}{}{}{}{:>9.2}",
        "em",
        fmt_cell(lookup("easy"), &|a| a.mean_em),
        format!(" {}", fmt_cell(lookup("medium"), &|a| a.mean_em)),
        fmt_cell(lookup("hard"), &|a| a.mean_em),
        report.aggregates.mean_em * 100.0
    );
    let _ = writeln!(
        out,
        "mean tokens/task {:.1} | mean wall ms/task {:.1} | total tokens {}",
        report.aggregates.mean_tokens_per_task,
        report.aggregates.mean_wall_time_ms,
        report.aggregates.total_prompt_tokens + report.aggregates.total_completion_tokens
    );
    for failure in &report.failures {
        let _ = writeln!(out, "failed: {} ({})", failure.question_id, failure.error);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{SearchStats, Trajectory};

    fn outcome(status: SearchStatus, answer: Option<&str>) -> SearchOutcome {
        SearchOutcome {
            status,
            answer: answer.map(String::from),
            accepted_trajectory: answer.map(|_| Trajectory { nodes: Vec::new() }),
            errors: Vec::new(),
            stats: SearchStats {
                llm_calls: 3,
                prompt_tokens: 100,
                completion_tokens: 40,
                tool_calls: 2,
                wall_time_ms: 5,
            },
        }
    }

    #[test]
    fn hotpotqa_loader_maps_fields_and_skips_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hotpot.json");
        std::fs::write(
            &path,
            r#"[
                {"id": "h1", "question": "Q1?", "answer": "A1", "level": "hard"},
                {"question": "Q2?", "answer": "A2"},
                {"question": "Q3?"},
                {"id": "h4", "question": "Q4?", "answer": "A4", "level": "ultra"},
                "not an object"
            ]"#,
        )
        .unwrap();
        let loaded = load_dataset(&path, Dataset::Hotpotqa).unwrap();
        assert_eq!(loaded.questions.len(), 2);
        assert_eq!(loaded.questions[0].id, "h1");
        assert_eq!(loaded.questions[0].difficulty, Some(Difficulty::Hard));
        assert_eq!(loaded.questions[0].gold_answer.as_deref(), Some("A1"));
        assert_eq!(loaded.questions[0].dataset, Dataset::Hotpotqa);
        assert_eq!(loaded.questions[1].id, "hotpotqa-1");
        assert_eq!(loaded.questions[1].difficulty, None);
        let indices: Vec<usize> = loaded.skipped.iter().map(|s| s.index).collect();
        assert_eq!(indices, vec![2, 3, 4]);
    }

    #[test]
    fn strategyqa_loader_maps_booleans() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sqa.json");
        std::fs::write(
            &path,
            r#"[
                {"qid": "s1", "question": "Is it?", "answer": true},
                {"question": "Was it?", "answer": false},
                {"question": "Bad", "answer": "yes"}
            ]"#,
        )
        .unwrap();
        let loaded = load_dataset(&path, Dataset::Strategyqa).unwrap();
        assert_eq!(loaded.questions.len(), 2);
        assert_eq!(loaded.questions[0].gold_answer.as_deref(), Some("yes"));
        assert_eq!(loaded.questions[1].gold_answer.as_deref(), Some("no"));
        assert_eq!(loaded.skipped.len(), 1);
        assert_eq!(loaded.skipped[0].index, 2);
    }

    #[test]
    fn game24_loader_reads_four_integer_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("puzzles.txt");
        std::fs::write(&path, "4 4 6 8\n\n1 2 3\n3 3 8 8\nx y z w\n").unwrap();
        let loaded = load_dataset(&path, Dataset::Game24).unwrap();
        assert_eq!(loaded.questions.len(), 2);
        assert_eq!(loaded.questions[0].text, "4 4 6 8");
        assert_eq!(loaded.questions[0].dataset, Dataset::Game24);
        assert!(loaded.questions[0].gold_answer.is_none());
        let indices: Vec<usize> = loaded.skipped.iter().map(|s| s.index).collect();
        assert_eq!(indices, vec![2, 4]);
    }

    #[test]
    fn missing_file_is_a_load_error() {
        let err = load_dataset(Path::new("/nonexistent/nope.json"), Dataset::Hotpotqa);
        assert!(matches!(err, Err(LoadError::Io(_))));
    }

    #[test]
    fn benchmark_scores_aggregates_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let mut questions = Vec::new();
        for (i, (difficulty, gold)) in [
            (Some(Difficulty::Easy), "alpha beta"),
            (Some(Difficulty::Hard), "gamma"),
            (Some(Difficulty::Hard), "delta"),
        ]
        .iter()
        .enumerate()
        {
            let mut q = Question::new(format!("q{i}"), format!("question {i}"));
            q.dataset = Dataset::Hotpotqa;
            q.difficulty = *difficulty;
            q.gold_answer = Some(gold.to_string());
            questions.push(q);
        }

        let artifacts = run_benchmark(
            "unit-run",
            Dataset::Hotpotqa,
            &questions,
            vec![SkippedRecord {
                index: 9,
                reason: "example".to_string(),
            }],
            2,
            dir.path(),
            |q, sink| {
                sink.emit(&crate::trace::TraceEvent {
                    seq: 0,
                    body: crate::trace::TraceBody::Final {
                        status: SearchStatus::Exhausted,
                        answer: None,
                        stats: SearchStats::default(),
                    },
                    timestamp_ms: 0,
                });
                match q.id.as_str() {
                    // Exact hit on q0, miss on q1, solve error on q2.
                    "q0" => Ok(outcome(SearchStatus::Solved, Some("alpha beta"))),
                    "q1" => Ok(outcome(SearchStatus::Exhausted, None)),
                    _ => Err(SolveError::Config(crate::config::ConfigError {
                        field: "k",
                        reason: "synthetic failure".to_string(),
                    })),
                }
            },
        )
        .unwrap();

        let report = &artifacts.report;
        assert_eq!(report.schema_version, REPORT_SCHEMA_VERSION);
        assert_eq!(report.total_questions, 3);
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.solved, 1);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].question_id, "q2");
        assert_eq!(report.skipped_records.len(), 1);

        // Rows stay in input order regardless of which worker ran them.
        assert_eq!(report.rows[0].question_id, "q0");
        assert_eq!(report.rows[1].question_id, "q1");
        assert!(report.rows[0].em);
        assert_eq!(report.rows[0].f1, 1.0);
        assert_eq!(report.rows[1].f1, 0.0);
        assert_eq!(report.aggregates.mean_f1, 0.5);
        assert_eq!(report.aggregates.mean_em, 0.5);
        assert_eq!(report.aggregates.per_difficulty["easy"].count, 1);
        assert_eq!(report.aggregates.per_difficulty["hard"].count, 1);
        assert_eq!(report.aggregates.mean_tokens_per_task, 140.0);

        // Trace files: one per question, including the failed one.
        for q in &questions {
            let trace = artifacts.trace_dir.join(format!("{}.jsonl", q.id));
            assert!(trace.exists(), "missing trace for {}", q.id);
        }
        assert!(artifacts.report_path.exists());
        let table = std::fs::read_to_string(&artifacts.table_path).unwrap();
        assert!(table.contains("easy"));
        assert!(table.contains("average"));
        assert!(table.contains("failed: q2"));

        // The JSON file round-trips to the same report.
        let json = std::fs::read_to_string(&artifacts.report_path).unwrap();
        let parsed: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(&parsed, report);
    }

    #[test]
    fn game24_rows_score_by_solved_status() {
        let mut q = Question::new("g0", "4 4 6 8");
        q.dataset = Dataset::Game24;
        let (f1, em) = score_question(&q, &outcome(SearchStatus::Solved, Some("...")));
        assert_eq!((f1, em), (1.0, true));
        let (f1, em) = score_question(&q, &outcome(SearchStatus::Exhausted, None));
        assert_eq!((f1, em), (0.0, false));
    }

    #[test]
    fn parallel_rows_keep_input_order() {
        let dir = tempfile::tempdir().unwrap();
        let questions: Vec<Question> = (0..16)
            .map(|i| {
                let mut q = Question::new(format!("p{i:02}"), "text");
                q.dataset = Dataset::Hotpotqa;
                q.gold_answer = Some("x".to_string());
                q
            })
            .collect();
        let artifacts = run_benchmark(
            "order-run",
            Dataset::Hotpotqa,
            &questions,
            Vec::new(),
            4,
            dir.path(),
            |q, _| {
                // Stagger finish times to shuffle completion order.
                let n: u64 = q.id[1..].parse().unwrap();
                std::thread::sleep(std::time::Duration::from_millis((16 - n) % 5));
                Ok(outcome(SearchStatus::Solved, Some("x")))
            },
        )
        .unwrap();
        let ids: Vec<&str> = artifacts
            .report
            .rows
            .iter()
            .map(|r| r.question_id.as_str())
            .collect();
        let expected: Vec<String> = (0..16).map(|i| format!("p{i:02}")).collect();
        assert_eq!(ids, expected.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn path_sanitization_replaces_unsafe_characters() {
        assert_eq!(sanitize_for_path("a/b:c d"), "a_b_c_d");
        assert_eq!(sanitize_for_path("ok-id_1.2"), "ok-id_1.2");
        assert_eq!(sanitize_for_path(""), "question");
    }
}
