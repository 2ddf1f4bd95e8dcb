//! Structured run traces: every state change in a search emits exactly one
//! event. Traces serialize to JSONL with a schema-version header line so
//! they can be inspected and replayed later.

use crate::types::{
    Action, ErrorRecord, Feasibility, SearchStats, SearchStatus,
};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Bumped whenever the event shapes below change incompatibly.
pub const TRACE_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: String,
}

impl Default for TraceHeader {
    fn default() -> Self {
        TraceHeader {
            schema_version: TRACE_SCHEMA_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Dense, monotonically increasing from 0 within one trace.
    pub seq: u64,
    #[serde(flatten)]
    pub body: TraceBody,
    /// Milliseconds since the Unix epoch; zero when replaying a cassette so
    /// replayed traces are byte-identical run to run.
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedChild {
    pub id: u64,
    pub depth: usize,
    pub thought: String,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BacktrackReason {
    /// A Finish was judged off-topic.
    AnswerRejected,
    /// An expansion produced no usable children.
    DeadEnd,
    /// The node sits at max_depth and cannot be expanded.
    DepthLimit,
    /// The branch spent its expansion allowance.
    ExpansionCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum TraceBody {
    Extract {
        question_id: String,
        entities: Vec<String>,
        /// True when extraction failed and the whole question text was used
        /// as the single synthetic entity.
        fallback: bool,
    },
    Generate {
        branch: usize,
        /// `None` for the synthetic layer-0 seed.
        parent: Option<u64>,
        children: Vec<GeneratedChild>,
        duplicates_discarded: u32,
        failed_slots: u32,
    },
    StepEval {
        node: u64,
        category: Feasibility,
        rationale: String,
    },
    ToolExec {
        node: u64,
        action: Action,
        observation: String,
    },
    AnswerEval {
        node: u64,
        answer: String,
        on_topic: bool,
        rationale: String,
    },
    Backtrack {
        from_node: u64,
        reason: BacktrackReason,
    },
    ErrorRecord {
        record: ErrorRecord,
    },
    Final {
        status: SearchStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        answer: Option<String>,
        stats: SearchStats,
    },
}

impl TraceBody {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceBody::Extract { .. } => "extract",
            TraceBody::Generate { .. } => "generate",
            TraceBody::StepEval { .. } => "step_eval",
            TraceBody::ToolExec { .. } => "tool_exec",
            TraceBody::AnswerEval { .. } => "answer_eval",
            TraceBody::Backtrack { .. } => "backtrack",
            TraceBody::ErrorRecord { .. } => "error_record",
            TraceBody::Final { .. } => "final",
        }
    }
}

/// Receives events as a search produces them.
pub trait TraceSink {
    fn emit(&mut self, event: &TraceEvent);
}

/// Collects events in memory; handy for tests and for rendering.
#[derive(Debug, Default)]
pub struct MemoryTraceSink {
    pub events: Vec<TraceEvent>,
}

impl TraceSink for MemoryTraceSink {
    fn emit(&mut self, event: &TraceEvent) {
        self.events.push(event.clone());
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullTraceSink;

impl TraceSink for NullTraceSink {
    fn emit(&mut self, _event: &TraceEvent) {}
}

/// Streams events to a JSONL file, writing the schema header up front.
pub struct JsonlTraceWriter {
    out: BufWriter<File>,
}

impl JsonlTraceWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut out = BufWriter::new(File::create(path)?);
        let header = serde_json::to_string(&TraceHeader::default()).expect("header serializes");
        out.write_all(header.as_bytes())?;
        out.write_all(b"\n")?;
        Ok(JsonlTraceWriter { out })
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

impl TraceSink for JsonlTraceWriter {
    fn emit(&mut self, event: &TraceEvent) {
        let line = serde_json::to_string(event).expect("trace event serializes");
        // Trace output failing mid-search would leave a silently truncated
        // record, which is worse than stopping; surface loudly.
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .expect("trace write failed");
    }
}

/// Fans one event stream out to two sinks.
pub struct TeeSink<'a, A: TraceSink, B: TraceSink> {
    pub first: &'a mut A,
    pub second: &'a mut B,
}

impl<A: TraceSink, B: TraceSink> TraceSink for TeeSink<'_, A, B> {
    fn emit(&mut self, event: &TraceEvent) {
        self.first.emit(event);
        self.second.emit(event);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceReadError {
    #[error("trace is empty: missing schema header line")]
    Empty,
    #[error("line 1: malformed schema header: {reason}")]
    BadHeader { reason: String },
    #[error("line 1: unsupported trace schema version `{found}` (expected `{expected}`)")]
    SchemaMismatch { found: String, expected: String },
    #[error("line {line}: malformed trace event: {reason}")]
    MalformedEvent { line: usize, reason: String },
    #[error("line {line}: seq gap: expected {expected}, found {found}")]
    SeqGap {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("io error reading trace: {0}")]
    Io(io::Error),
}

// The io error is spelled out in the message, so it is deliberately not also
// the `source()`: chain-style printers would repeat it.
impl From<io::Error> for TraceReadError {
    fn from(e: io::Error) -> Self {
        TraceReadError::Io(e)
    }
}

/// Reads and validates a JSONL trace: header first, then events with dense
/// ascending `seq` starting at 0. Errors carry 1-based line numbers.
pub fn read_trace(reader: impl io::Read) -> Result<(TraceHeader, Vec<TraceEvent>), TraceReadError> {
    let mut lines = BufReader::new(reader).lines();
    let header_line = match lines.next() {
        Some(l) => l?,
        None => return Err(TraceReadError::Empty),
    };
    if header_line.trim().is_empty() {
        return Err(TraceReadError::Empty);
    }
    let header: TraceHeader =
        serde_json::from_str(&header_line).map_err(|e| TraceReadError::BadHeader {
            reason: e.to_string(),
        })?;
    if header.schema_version != TRACE_SCHEMA_VERSION {
        return Err(TraceReadError::SchemaMismatch {
            found: header.schema_version,
            expected: TRACE_SCHEMA_VERSION.to_string(),
        });
    }

    let mut events = Vec::new();
    let mut expected_seq = 0u64;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: TraceEvent =
            serde_json::from_str(&line).map_err(|e| TraceReadError::MalformedEvent {
                line: line_no,
                reason: e.to_string(),
            })?;
        if event.seq != expected_seq {
            return Err(TraceReadError::SeqGap {
                line: line_no,
                expected: expected_seq,
                found: event.seq,
            });
        }
        expected_seq += 1;
        events.push(event);
    }
    Ok((header, events))
}

pub fn read_trace_file(path: &Path) -> Result<(TraceHeader, Vec<TraceEvent>), TraceReadError> {
    read_trace(File::open(path)?)
}
