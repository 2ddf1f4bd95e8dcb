//! Shared plumbing for the command-line frontend: layered configuration
//! resolution (flag > environment > config file > default), gateway and
//! engine assembly per backend and dataset, and the trace tree renderer.

use anyhow::{bail, Context};
use delver::bench::{sanitize_for_path, BenchArtifacts, LoadedDataset};
use delver::environments::game24::{Game24Enumerator, Game24Env, Game24Judge};
use delver::environments::wiki::{Corpus, WikiEnv};
use delver::evaluators::{LlmAnswerJudge, LlmStepJudge, StepJudge};
use delver::extractor::{EntitySource, ExtractionOutcome, LlmExtractor};
use delver::gateway::{api_key_from_env, CallMeter, CassetteSink, Gateway, HttpTransport, MeterError};
use delver::generator::LlmGenerator;
use delver::trace::{TraceBody, TraceEvent, TraceSink};
use delver::types::{
    Action, Dataset, FeasibilityVerdict, Node, Question, SearchOutcome, SearchStatus,
};
use delver::{Explorer, SearchConfig, SolveError};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendKind {
    /// Send requests to a live chat-completions endpoint.
    Live,
    /// Live requests, with every exchange appended to the cassette file.
    Record,
    /// Serve responses from a cassette; no network, zeroed timestamps.
    Replay,
}

impl BackendKind {
    fn parse(raw: &str) -> anyhow::Result<Self> {
        match raw.to_ascii_lowercase().as_str() {
            "live" => Ok(BackendKind::Live),
            "record" => Ok(BackendKind::Record),
            "replay" => Ok(BackendKind::Replay),
            other => bail!("unknown backend {other:?} (expected live, record, or replay)"),
        }
    }
}

/// Values given on the command line; `None` falls through to the
/// environment, then the config file, then the built-in default. The
/// disable toggles are one-directional flags, present or absent.
#[derive(Debug, Default, Clone)]
pub struct ConfigOverrides {
    pub config: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub cassette: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub k: Option<usize>,
    pub max_depth: Option<usize>,
    pub budget: Option<u64>,
    pub temperature: Option<f64>,
    pub no_extractor: bool,
    pub no_step_eval: bool,
    pub no_answer_eval: bool,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
    pub base_url: Option<String>,
    pub model: Option<String>,
}

/// Config-file schema (TOML). Every command-line flag has a key here.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    backend: Option<String>,
    cassette: Option<PathBuf>,
    corpus: Option<PathBuf>,
    k: Option<usize>,
    max_depth: Option<usize>,
    budget: Option<u64>,
    temperature: Option<f64>,
    no_extractor: Option<bool>,
    no_step_eval: Option<bool>,
    no_answer_eval: Option<bool>,
    parallelism: Option<usize>,
    out: Option<PathBuf>,
    base_url: Option<String>,
    model: Option<String>,
}

/// Fully resolved configuration for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub search: SearchConfig,
    pub backend: BackendKind,
    pub cassette: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub parallelism: usize,
    pub out: PathBuf,
    pub base_url: String,
    pub model: String,
}

fn parse_bool(name: &str, raw: &str) -> anyhow::Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => bail!("{name} must be a boolean, got {other:?}"),
    }
}

fn env_parsed<T: std::str::FromStr>(
    env: &BTreeMap<String, String>,
    name: &str,
) -> anyhow::Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match env.get(name) {
        Some(raw) => match raw.parse::<T>() {
            Ok(v) => Ok(Some(v)),
            Err(e) => bail!("{name}={raw:?} does not parse: {e}"),
        },
        None => Ok(None),
    }
}

fn env_bool(env: &BTreeMap<String, String>, name: &str) -> anyhow::Result<Option<bool>> {
    env.get(name).map(|raw| parse_bool(name, raw)).transpose()
}

/// Resolves the effective configuration from explicit overrides, an
/// environment map, and an optional TOML config file, in that precedence
/// order. API credentials are read from the environment only (DELVER_API_KEY
/// or OPENAI_API_KEY), never from the config file.
pub fn resolve_config(
    overrides: &ConfigOverrides,
    env: &BTreeMap<String, String>,
) -> anyhow::Result<AppConfig> {
    let file_path = overrides
        .config
        .clone()
        .or_else(|| env.get("DELVER_CONFIG").map(PathBuf::from));
    let file: FileConfig = match &file_path {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            toml::from_str(&raw)
                .with_context(|| format!("cannot parse config file {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let backend = match overrides.backend {
        Some(b) => b,
        None => match env.get("DELVER_BACKEND") {
            Some(raw) => BackendKind::parse(raw)?,
            None => match &file.backend {
                Some(raw) => BackendKind::parse(raw)?,
                None => BackendKind::Live,
            },
        },
    };

    let defaults = SearchConfig::default();
    let mut search = SearchConfig::default();
    search.k = overrides
        .k
        .or(env_parsed(env, "DELVER_K")?)
        .or(file.k)
        .unwrap_or(defaults.k);
    search.max_depth = overrides
        .max_depth
        .or(env_parsed(env, "DELVER_MAX_DEPTH")?)
        .or(file.max_depth)
        .unwrap_or(defaults.max_depth);
    search.llm_call_budget = overrides
        .budget
        .or(env_parsed(env, "DELVER_BUDGET")?)
        .or(file.budget)
        .unwrap_or(defaults.llm_call_budget);
    search.temperature = overrides
        .temperature
        .or(env_parsed(env, "DELVER_TEMPERATURE")?)
        .or(file.temperature)
        .unwrap_or(defaults.temperature);
    search.extractor_enabled = !(overrides.no_extractor
        || env_bool(env, "DELVER_NO_EXTRACTOR")?
            .or(file.no_extractor)
            .unwrap_or(false));
    search.step_eval_enabled = !(overrides.no_step_eval
        || env_bool(env, "DELVER_NO_STEP_EVAL")?
            .or(file.no_step_eval)
            .unwrap_or(false));
    search.answer_eval_enabled = !(overrides.no_answer_eval
        || env_bool(env, "DELVER_NO_ANSWER_EVAL")?
            .or(file.no_answer_eval)
            .unwrap_or(false));
    let search = search.validate().map_err(anyhow::Error::from)?;

    Ok(AppConfig {
        search,
        backend,
        cassette: overrides
            .cassette
            .clone()
            .or_else(|| env.get("DELVER_CASSETTE").map(PathBuf::from))
            .or(file.cassette),
        corpus: overrides
            .corpus
            .clone()
            .or_else(|| env.get("DELVER_CORPUS").map(PathBuf::from))
            .or(file.corpus),
        parallelism: overrides
            .parallelism
            .or(env_parsed(env, "DELVER_PARALLELISM")?)
            .or(file.parallelism)
            .unwrap_or(DEFAULT_PARALLELISM)
            .max(1),
        out: overrides
            .out
            .clone()
            .or_else(|| env.get("DELVER_OUT").map(PathBuf::from))
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("out")),
        base_url: overrides
            .base_url
            .clone()
            .or_else(|| env.get("DELVER_BASE_URL").cloned())
            .or(file.base_url)
            .unwrap_or_else(|| DEFAULT_BASE_URL.to_string()),
        model: overrides
            .model
            .clone()
            .or_else(|| env.get("DELVER_MODEL").cloned())
            .or(file.model)
            .unwrap_or_else(|| DEFAULT_MODEL.to_string()),
    })
}

/// Snapshot of the process environment for resolve_config.
pub fn process_env() -> BTreeMap<String, String> {
    std::env::vars().collect()
}

/// Builds the gateway for the resolved backend. `cassette_override` replaces
/// the configured cassette path (the bench uses one cassette per question).
pub fn build_gateway(
    app: &AppConfig,
    cassette_override: Option<&Path>,
) -> anyhow::Result<Gateway> {
    let cassette = cassette_override.or(app.cassette.as_deref());
    match app.backend {
        BackendKind::Live => Ok(Gateway::live(
            HttpTransport::new(&app.base_url).with_api_key(api_key_from_env()),
            &app.model,
        )),
        BackendKind::Record => {
            let cassette =
                cassette.context("--backend record requires --cassette PATH to write to")?;
            if let Some(parent) = cassette.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            Ok(Gateway::record(
                HttpTransport::new(&app.base_url).with_api_key(api_key_from_env()),
                CassetteSink::file(cassette).map_err(anyhow::Error::from)?,
                &app.model,
            ))
        }
        BackendKind::Replay => {
            let cassette =
                cassette.context("--backend replay requires --cassette PATH to read from")?;
            Gateway::replay_file(cassette, &app.model)
                .with_context(|| format!("cannot load cassette {}", cassette.display()))
        }
    }
}

/// Extractor stand-in for configurations where extraction is disabled.
pub struct DisabledEntities;
impl EntitySource for DisabledEntities {
    fn entities(
        &self,
        _question: &Question,
        _meter: &mut CallMeter,
    ) -> Result<ExtractionOutcome, MeterError> {
        unreachable!("the extractor toggle is off, so this source is never consulted")
    }
}

/// Step judge stand-in for configurations where step evaluation is disabled.
pub struct DisabledSteps;
impl StepJudge for DisabledSteps {
    fn evaluate_step(
        &self,
        _question: &Question,
        _trajectory: &[Node],
        _meter: &mut CallMeter,
    ) -> Result<FeasibilityVerdict, MeterError> {
        unreachable!("the step-evaluator toggle is off, so this judge is never consulted")
    }
}

/// Exact-search profile for the deterministic Game-of-24 move generator: no
/// model anywhere, full-width enumeration, depth for three combinations plus
/// the final answer line.
pub fn oracle_game24_config(base: &SearchConfig) -> SearchConfig {
    let mut config = base.clone();
    config.k = 10_000;
    config.max_depth = 4;
    config.extractor_enabled = false;
    config.step_eval_enabled = false;
    config
}

fn zero_timestamps(app: &AppConfig) -> bool {
    app.backend == BackendKind::Replay
}

/// Runs one question end to end with the configured backend. The wiki
/// environment is used unless the question is tagged game24, in which case
/// either the model proposes moves (default) or, with `oracle_moves`, the
/// deterministic enumerator searches without any model calls.
pub fn solve_question(
    app: &AppConfig,
    question: &Question,
    oracle_moves: bool,
    gateway: Option<&Gateway>,
    sink: &mut dyn TraceSink,
) -> anyhow::Result<SearchOutcome> {
    if question.dataset == Dataset::Game24 {
        let env = Game24Env::from_question(question)
            .context("a game24 question must contain exactly four integers")?;
        if oracle_moves {
            let config = oracle_game24_config(&app.search);
            let explorer = Explorer::new(
                &env,
                &DisabledEntities,
                &Game24Enumerator,
                &DisabledSteps,
                &Game24Judge,
                config,
            )
            .with_zero_timestamps(zero_timestamps(app));
            return explorer.solve(question, sink).map_err(anyhow::Error::from);
        }
        let gateway = gateway.context("a model gateway is required without --oracle-moves")?;
        let c = &app.search;
        let extractor = LlmExtractor::new(gateway, c.temperature, c.retries, c.max_branches);
        let generator = LlmGenerator::new(gateway, c.temperature, c.retries);
        let steps = LlmStepJudge::new(gateway, c.temperature, c.retries);
        let explorer = Explorer::new(
            &env,
            &extractor,
            &generator,
            &steps,
            &Game24Judge,
            c.clone(),
        )
        .with_zero_timestamps(zero_timestamps(app));
        return explorer.solve(question, sink).map_err(anyhow::Error::from);
    }

    if oracle_moves {
        bail!("--oracle-moves only applies to game24 questions");
    }
    let corpus_path = app
        .corpus
        .as_ref()
        .context("--corpus PATH is required for retrieval questions")?;
    let corpus = Corpus::load(corpus_path)
        .with_context(|| format!("cannot load corpus {}", corpus_path.display()))?;
    let env = WikiEnv::new(corpus);
    let gateway = gateway.context("a model gateway is required for retrieval questions")?;
    let c = &app.search;
    let extractor = LlmExtractor::new(gateway, c.temperature, c.retries, c.max_branches);
    let generator = LlmGenerator::new(gateway, c.temperature, c.retries);
    let steps = LlmStepJudge::new(gateway, c.temperature, c.retries);
    let answers = LlmAnswerJudge::new(gateway, c.temperature, c.retries);
    let explorer = Explorer::new(&env, &extractor, &generator, &steps, &answers, c.clone())
        .with_zero_timestamps(zero_timestamps(app));
    explorer.solve(question, sink).map_err(anyhow::Error::from)
}

/// Maps a finished search to the process exit code: 0 solved, 2 searched
/// everything without an accepted answer, 3 stopped by the call budget.
pub fn exit_code_for(status: SearchStatus) -> i32 {
    match status {
        SearchStatus::Solved => 0,
        SearchStatus::Exhausted | SearchStatus::DepthExhausted => 2,
        SearchStatus::BudgetExceeded => 3,
    }
}

/// Runs a loaded dataset through the engine with bounded parallelism. For
/// record/replay backends the configured cassette path is a directory with
/// one cassette per question id.
pub fn bench_dataset(
    app: &AppConfig,
    kind: Dataset,
    loaded: LoadedDataset,
    run_id: &str,
    oracle_moves: bool,
) -> anyhow::Result<BenchArtifacts> {
    let live_gateway = match app.backend {
        BackendKind::Live if !oracle_moves => Some(build_gateway(app, None)?),
        _ => None,
    };
    if matches!(app.backend, BackendKind::Record | BackendKind::Replay) && !oracle_moves {
        let dir = app
            .cassette
            .as_ref()
            .context("record/replay benchmarks need --cassette DIR (one cassette per question)")?;
        if app.backend == BackendKind::Record {
            std::fs::create_dir_all(dir)?;
        }
    }

    let artifacts = delver::bench::run_benchmark(
        run_id,
        kind,
        &loaded.questions,
        loaded.skipped,
        app.parallelism,
        &app.out,
        |question, sink| {
            let per_question_gateway = match (&live_gateway, oracle_moves) {
                (_, true) => None,
                (Some(_), _) => None,
                (None, false) => {
                    let dir = app.cassette.as_deref().expect("checked above");
                    let path = dir.join(format!("{}.jsonl", sanitize_for_path(&question.id)));
                    match build_gateway(app, Some(&path)) {
                        Ok(g) => Some(g),
                        Err(e) => {
                            return Err(SolveError::Gateway(
                                delver::gateway::GatewayError::CassetteIo(
                                    std::io::Error::other(e.to_string()),
                                ),
                            ))
                        }
                    }
                }
            };
            let gateway = per_question_gateway.as_ref().or(live_gateway.as_ref());
            solve_question(app, question, oracle_moves, gateway, sink).map_err(flatten_solve)
        },
    )?;
    Ok(artifacts)
}

/// run_benchmark's closure returns SolveError; adapt assembly errors into it
/// so they land in the report as per-question failures.
fn flatten_solve(e: anyhow::Error) -> SolveError {
    match e.downcast::<SolveError>() {
        Ok(solve) => solve,
        Err(other) => SolveError::Gateway(delver::gateway::GatewayError::CassetteIo(
            std::io::Error::other(other.to_string()),
        )),
    }
}

fn short(text: &str, limit: usize) -> String {
    let mut out: String = text.chars().take(limit).collect();
    if text.chars().count() > limit {
        out.push_str("...");
    }
    out.replace('\n', " ")
}

/// Renders a recorded event stream as an indented branch/node tree with
/// verdicts inline; rejected answers, backtracks, and error records carry a
/// `!!` marker so failed paths stand out.
pub fn render_trace_tree(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    let mut depths: BTreeMap<u64, usize> = BTreeMap::new();
    let indent_for = |depths: &BTreeMap<u64, usize>, node: u64| {
        "  ".repeat(depths.get(&node).copied().unwrap_or(0) + 1)
    };
    for event in events {
        match &event.body {
            TraceBody::Extract {
                question_id,
                entities,
                fallback,
            } => {
                let _ = writeln!(
                    out,
                    "question {question_id}: {} seed entit{} [{}]{}",
                    entities.len(),
                    if entities.len() == 1 { "y" } else { "ies" },
                    entities.join(", "),
                    if *fallback { " (fallback: extraction failed)" } else { "" }
                );
            }
            TraceBody::Generate {
                branch,
                parent,
                children,
                duplicates_discarded,
                failed_slots,
            } => {
                for child in children {
                    depths.insert(child.id, child.depth);
                }
                match parent {
                    None => {
                        let seed = children.first();
                        let _ = writeln!(
                            out,
                            "branch {branch}: {}",
                            seed.map(|c| format!("node {} {}", c.id, c.action))
                                .unwrap_or_default()
                        );
                    }
                    Some(parent_id) => {
                        let pad = indent_for(&depths, *parent_id);
                        let mut note = String::new();
                        if *duplicates_discarded > 0 {
                            let _ = write!(note, " ({duplicates_discarded} duplicate{} discarded)",
                                if *duplicates_discarded == 1 { "" } else { "s" });
                        }
                        if *failed_slots > 0 {
                            let _ = write!(note, " ({failed_slots} slot{} unparseable)",
                                if *failed_slots == 1 { "" } else { "s" });
                        }
                        let _ = writeln!(
                            out,
                            "{pad}expand node {parent_id}: {} candidate{}{note}",
                            children.len(),
                            if children.len() == 1 { "" } else { "s" }
                        );
                        for child in children {
                            let _ = writeln!(
                                out,
                                "{pad}  node {} [{}] {}",
                                child.id,
                                child.action,
                                short(&child.thought, 90)
                            );
                        }
                    }
                }
            }
            TraceBody::ToolExec {
                node, observation, ..
            } => {
                let pad = indent_for(&depths, *node);
                let _ = writeln!(out, "{pad}  obs@{node}: {}", short(observation, 110));
            }
            TraceBody::StepEval {
                node,
                category,
                rationale,
            } => {
                let pad = indent_for(&depths, *node);
                let _ = writeln!(
                    out,
                    "{pad}  verdict@{node}: {category} ({})",
                    short(rationale, 90)
                );
            }
            TraceBody::AnswerEval {
                node,
                answer,
                on_topic,
                rationale,
            } => {
                let pad = indent_for(&depths, *node);
                let mark = if *on_topic { "accepted" } else { "!! rejected" };
                let _ = writeln!(
                    out,
                    "{pad}answer@{node} {answer:?}: {mark} ({})",
                    short(rationale, 90)
                );
            }
            TraceBody::Backtrack { from_node, reason } => {
                let pad = indent_for(&depths, *from_node);
                let _ = writeln!(out, "{pad}!! backtrack from node {from_node}: {reason:?}");
            }
            TraceBody::ErrorRecord { record } => {
                let _ = writeln!(
                    out,
                    "!! error record (branch {}): rejected {:?} ({})",
                    record.branch,
                    record.rejected_answer,
                    short(&record.rationale, 90)
                );
            }
            TraceBody::Final {
                status,
                answer,
                stats,
            } => {
                let _ = writeln!(
                    out,
                    "final: {status:?}{} | llm_calls {} | tool_calls {} | tokens {}+{}",
                    answer
                        .as_ref()
                        .map(|a| format!(", answer {a:?}"))
                        .unwrap_or_default(),
                    stats.llm_calls,
                    stats.tool_calls,
                    stats.prompt_tokens,
                    stats.completion_tokens
                );
            }
        }
    }
    out
}

/// The action's verb+payload as shown in listings.
pub fn describe_action(action: &Action) -> String {
    action.to_string()
}
