//! Entity-seeded depth-first search over thought/action/observation nodes,
//! with step-feasibility ranking, answer verification, and error-conditioned
//! regeneration. Runs against live chat-completion endpoints or deterministic
//! scripted and recorded backends.

pub mod bench;
pub mod config;
pub mod environments;
pub mod evaluators;
pub mod explorer;
pub mod extractor;
pub mod gateway;
pub mod generator;
pub mod metrics;
pub mod prompts;
pub mod trace;
pub mod types;

pub use config::{ConfigError, SearchConfig};
pub use environments::game24::{Game24Enumerator, Game24Env, Game24Judge};
pub use environments::wiki::{Corpus, WikiEnv};
pub use environments::{EnvError, Environment};
pub use evaluators::{
    parse_judgment, parse_step_verdict, rank_frontier, AnswerJudge, LlmAnswerJudge, LlmStepJudge,
    StepJudge, VerdictParseError,
};
pub use explorer::{Explorer, FrontierStack, SolveError};
pub use extractor::{EntityParseError, EntitySource, ExtractionOutcome, LlmExtractor};
pub use generator::{
    CandidateSource, GenerationBatch, GenerationError, LlmGenerator, NodeDraft, NodeParseError,
};
pub use gateway::{
    CallMeter, CassetteSink, ChatExchange, ChatMessage, ChatRequest, ChatResponse, Gateway,
    GatewayError, HttpTransport, MeterError, RetryPolicy, Role, ScriptedTransport, Transport,
};
pub use trace::{
    BacktrackReason, GeneratedChild, JsonlTraceWriter, MemoryTraceSink, NullTraceSink, TraceBody,
    TraceEvent, TraceHeader, TraceReadError, TraceSink,
};
pub use types::{
    Action, AnswerVerdict, Dataset, Difficulty, Entity, ErrorRecord, Feasibility,
    FeasibilityVerdict, InvariantViolation, Node, Question, SearchOutcome, SearchStats,
    SearchStatus, Trajectory,
};
