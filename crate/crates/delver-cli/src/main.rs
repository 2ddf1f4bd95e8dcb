use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use delver::bench::load_dataset;
use delver::trace::{read_trace_file, JsonlTraceWriter};
use delver::types::{Dataset, Question, SearchStatus};
use delver_cli::{
    bench_dataset, build_gateway, exit_code_for, process_env, render_trace_tree, resolve_config,
    solve_question, BackendKind, ConfigOverrides,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Entity-seeded depth-first question answering over tool environments,
/// with step feasibility ranking, answer verification, and error-guided
/// regeneration.
#[derive(Debug, Parser)]
#[command(name = "delver", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Solve one question and write its trace.
    Run(RunArgs),
    /// Score a dataset file and write a report.
    Bench(BenchArgs),
    /// Pretty-print a recorded trace as a branch/node tree.
    Replay(ReplayArgs),
}

/// Every flag here also has a DELVER_* environment variable and a config-file
/// key; precedence is flag, then environment, then file, then default.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML config file (env: DELVER_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// live, record, or replay (env: DELVER_BACKEND).
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Cassette file (run) or directory (bench) for record/replay
    /// (env: DELVER_CASSETTE).
    #[arg(long)]
    cassette: Option<PathBuf>,
    /// Document corpus JSON for retrieval questions (env: DELVER_CORPUS).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Candidates generated per expansion (env: DELVER_K).
    #[arg(long)]
    k: Option<usize>,
    /// Maximum node depth per branch (env: DELVER_MAX_DEPTH).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Model-call ceiling per question (env: DELVER_BUDGET).
    #[arg(long)]
    budget: Option<u64>,
    /// Sampling temperature (env: DELVER_TEMPERATURE).
    #[arg(long)]
    temperature: Option<f64>,
    /// Skip entity extraction; search a single branch seeded with the
    /// question itself (env: DELVER_NO_EXTRACTOR).
    #[arg(long)]
    no_extractor: bool,
    /// Skip step feasibility ranking; keep generation order
    /// (env: DELVER_NO_STEP_EVAL).
    #[arg(long)]
    no_step_eval: bool,
    /// Accept the first proposed answer without verification
    /// (env: DELVER_NO_ANSWER_EVAL).
    #[arg(long)]
    no_answer_eval: bool,
    /// Concurrent questions during bench (env: DELVER_PARALLELISM).
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output directory for traces and reports (env: DELVER_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Chat-completions endpoint base URL (env: DELVER_BASE_URL).
    #[arg(long)]
    base_url: Option<String>,
    /// Model name sent with each request (env: DELVER_MODEL).
    #[arg(long)]
    model: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            config: self.config.clone(),
            backend: self.backend,
            cassette: self.cassette.clone(),
            corpus: self.corpus.clone(),
            k: self.k,
            max_depth: self.max_depth,
            budget: self.budget,
            temperature: self.temperature,
            no_extractor: self.no_extractor,
            no_step_eval: self.no_step_eval,
            no_answer_eval: self.no_answer_eval,
            parallelism: self.parallelism,
            out: self.out.clone(),
            base_url: self.base_url.clone(),
            model: self.model.clone(),
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// The question to answer.
    #[arg(long)]
    question: String,
    /// Question id used for the trace filename.
    #[arg(long, default_value = "question")]
    id: String,
    /// Dataset tag; game24 switches to the arithmetic environment.
    #[arg(long, value_enum, default_value_t = DatasetArg::Custom)]
    dataset: DatasetArg,
    /// game24 only: search with the exact deterministic move enumerator
    /// instead of the model.
    #[arg(long)]
    oracle_moves: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Dataset file (JSON for hotpotqa/strategyqa, one puzzle per line for
    /// game24).
    data: PathBuf,
    /// Dataset format to parse.
    #[arg(long, value_enum)]
    dataset: DatasetArg,
    /// Identifier baked into report and trace filenames.
    #[arg(long, default_value = "bench")]
    run_id: String,
    /// game24 only: use the exact deterministic move enumerator.
    #[arg(long)]
    oracle_moves: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Trace file produced by `run` or `bench`.
    trace: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum DatasetArg {
    Hotpotqa,
    Strategyqa,
    Game24,
    Custom,
}

impl From<DatasetArg> for Dataset {
    fn from(value: DatasetArg) -> Self {
        match value {
            DatasetArg::Hotpotqa => Dataset::Hotpotqa,
            DatasetArg::Strategyqa => Dataset::Strategyqa,
            DatasetArg::Game24 => Dataset::Game24,
            DatasetArg::Custom => Dataset::Custom,
        }
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<i32> {
    let app = resolve_config(&args.config.overrides(), &process_env())?;
    let question = Question {
        id: args.id.clone(),
        text: args.question.clone(),
        gold_answer: None,
        difficulty: None,
        dataset: args.dataset.into(),
    };

    let gateway = match (question.dataset, args.oracle_moves) {
        (Dataset::Game24, true) => None,
        _ => Some(build_gateway(&app, None)?),
    };

    std::fs::create_dir_all(&app.out)
        .with_context(|| format!("cannot create output directory {}", app.out.display()))?;
    let trace_path = app.out.join(format!(
        "{}.jsonl",
        delver::bench::sanitize_for_path(&question.id)
    ));
    let mut sink = JsonlTraceWriter::create(&trace_path)
        .with_context(|| format!("cannot create trace file {}", trace_path.display()))?;

    let outcome = solve_question(&app, &question, args.oracle_moves, gateway.as_ref(), &mut sink);
    let finish = sink.finish();
    let outcome = outcome?;
    finish.with_context(|| format!("cannot flush trace file {}", trace_path.display()))?;

    println!("status: {}", status_word(outcome.status));
    match &outcome.answer {
        Some(answer) => println!("answer: {answer}"),
        None => println!("answer: (none)"),
    }
    println!(
        "calls: {} model, {} tool | tokens: {} prompt, {} completion",
        outcome.stats.llm_calls,
        outcome.stats.tool_calls,
        outcome.stats.prompt_tokens,
        outcome.stats.completion_tokens
    );
    println!("trace: {}", trace_path.display());
    Ok(exit_code_for(outcome.status))
}

fn status_word(status: SearchStatus) -> &'static str {
    match status {
        SearchStatus::Solved => "solved",
        SearchStatus::Exhausted => "exhausted",
        SearchStatus::DepthExhausted => "depth_exhausted",
        SearchStatus::BudgetExceeded => "budget_exceeded",
    }
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<i32> {
    let app = resolve_config(&args.config.overrides(), &process_env())?;
    let kind: Dataset = args.dataset.into();
    let loaded = load_dataset(&args.data, kind)
        .with_context(|| format!("cannot load dataset {}", args.data.display()))?;
    if loaded.questions.is_empty() {
        anyhow::bail!(
            "dataset {} contains no usable questions ({} skipped)",
            args.data.display(),
            loaded.skipped.len()
        );
    }
    let total = loaded.questions.len();
    let artifacts = bench_dataset(&app, kind, loaded, &args.run_id, args.oracle_moves)?;

    print!("{}", delver::bench::render_table(&artifacts.report));
    println!("report: {}", artifacts.report_path.display());
    println!("table: {}", artifacts.table_path.display());
    println!("traces: {}", artifacts.trace_dir.display());
    // Partial failures are reported in the table; only a fully failed run is
    // an error exit.
    if artifacts.report.failures.len() == total {
        eprintln!("error: every question failed");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_replay(args: ReplayArgs) -> anyhow::Result<i32> {
    match read_trace_file(&args.trace) {
        Ok((header, events)) => {
            println!(
                "trace {} | schema v{} | {} events",
                args.trace.display(),
                header.schema_version,
                events.len()
            );
            print!("{}", render_trace_tree(&events));
            Ok(0)
        }
        Err(err) => {
            eprintln!("error: {}: {err}", args.trace.display());
            Ok(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Replay(args) => cmd_replay(args),
    };
    match result {
        Ok(code) => ExitCode::from(u8::try_from(code).unwrap_or(1)),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
