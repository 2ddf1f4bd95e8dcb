//! Chat-completion gateway: one `complete` entry point over interchangeable
//! backends (live HTTP endpoint, recorded cassette replay, scripted
//! responses), plus request digests and cassette persistence.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// Concatenated message text, used by tests and scripted routers to
    /// recognize what kind of prompt a request carries.
    pub fn flat_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&m.content);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// One request/response pair as stored in a cassette.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub request: ChatRequest,
    pub response: ChatResponse,
    /// `canonical_digest` of `request`, the primary replay key.
    pub request_digest: String,
}

/// Hex SHA-256 over the canonical JSON form of the request. Canonical means
/// object keys sorted and no insignificant whitespace, so any two JSON
/// encodings of the same request digest identically.
pub fn canonical_digest(request: &ChatRequest) -> String {
    let value = serde_json::to_value(request).expect("request serializes");
    let canonical = serde_json::to_string(&value).expect("value serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempts: {reason}")]
    Transport { attempts: u32, reason: String },
    #[error("malformed response from endpoint: {reason}")]
    MalformedResponse { reason: String },
    #[error("replay miss: cassette has no unconsumed exchange (request digest {digest})")]
    ReplayMiss { digest: String },
    #[error("scripted backend exhausted after {calls} responses")]
    ScriptExhausted { calls: u64 },
    #[error("cassette io: {0}")]
    CassetteIo(std::io::Error),
    #[error("cassette line {line}: {reason}")]
    CassetteParse { line: usize, reason: String },
}

// The io error is part of the message itself, so it must not double as
// `source()`: error-chain printers would repeat it once per level.
impl From<std::io::Error> for GatewayError {
    fn from(e: std::io::Error) -> Self {
        GatewayError::CassetteIo(e)
    }
}

/// Something that can answer one chat request.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

/// Live OpenAI-compatible chat-completions endpoint.
///
/// The bearer token is never read from configuration files; pass it in from
/// the environment via [`api_key_from_env`].
pub struct HttpTransport {
    base_url: String,
    api_key: Option<String>,
    max_tokens: Option<u32>,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

/// Reads the bearer token from `DELVER_API_KEY`, falling back to
/// `OPENAI_API_KEY`.
pub fn api_key_from_env() -> Option<String> {
    std::env::var("DELVER_API_KEY")
        .or_else(|_| std::env::var("OPENAI_API_KEY"))
        .ok()
        .filter(|k| !k.is_empty())
}

impl HttpTransport {
    pub fn new(base_url: impl Into<String>) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("http client builds");
        HttpTransport {
            base_url: base_url.into(),
            api_key: None,
            max_tokens: None,
            retry: RetryPolicy::default(),
            client,
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: Option<u32>) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, request: &ChatRequest) -> Result<ChatResponse, AttemptFailure> {
        #[derive(Serialize)]
        struct WireRequest<'a> {
            model: &'a str,
            messages: &'a [ChatMessage],
            temperature: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            max_tokens: Option<u32>,
        }

        let body = WireRequest {
            model: &request.model,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: self.max_tokens,
        };

        let mut req = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| AttemptFailure::Retryable(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| AttemptFailure::Retryable(e.to_string()))?;
        if !status.is_success() {
            return Err(AttemptFailure::Retryable(format!(
                "http status {status}: {}",
                text.chars().take(200).collect::<String>()
            )));
        }
        parse_wire_response(&text).map_err(AttemptFailure::Fatal)
    }
}

enum AttemptFailure {
    Retryable(String),
    Fatal(GatewayError),
}

fn parse_wire_response(text: &str) -> Result<ChatResponse, GatewayError> {
    #[derive(Deserialize)]
    struct WireResponse {
        #[serde(default)]
        choices: Vec<WireChoice>,
        #[serde(default)]
        usage: Option<WireUsage>,
    }
    #[derive(Deserialize)]
    struct WireChoice {
        message: WireMessage,
    }
    #[derive(Deserialize)]
    struct WireMessage {
        #[serde(default)]
        content: Option<String>,
    }
    #[derive(Deserialize, Default)]
    struct WireUsage {
        #[serde(default)]
        prompt_tokens: u64,
        #[serde(default)]
        completion_tokens: u64,
    }

    let wire: WireResponse =
        serde_json::from_str(text).map_err(|e| GatewayError::MalformedResponse {
            reason: format!("body is not a chat completion: {e}"),
        })?;
    let choice = wire
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| GatewayError::MalformedResponse {
            reason: "response has no choices".to_string(),
        })?;
    let content = choice
        .message
        .content
        .ok_or_else(|| GatewayError::MalformedResponse {
            reason: "first choice has no message content".to_string(),
        })?;
    let usage = wire.usage.unwrap_or_default();
    Ok(ChatResponse {
        content,
        prompt_tokens: usage.prompt_tokens,
        completion_tokens: usage.completion_tokens,
    })
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = self.retry.initial_backoff * 2u32.saturating_pow(attempt - 1);
                std::thread::sleep(backoff);
            }
            match self.attempt(request) {
                Ok(resp) => return Ok(resp),
                Err(AttemptFailure::Fatal(e)) => return Err(e),
                Err(AttemptFailure::Retryable(reason)) => last = reason,
            }
        }
        Err(GatewayError::Transport {
            attempts,
            reason: last,
        })
    }
}

fn whitespace_tokens(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

type RouterFn = dyn Fn(&ChatRequest, u64) -> Option<String> + Send + Sync;

enum Script {
    Queue(VecDeque<String>),
    Router(Box<RouterFn>),
}

/// Deterministic stand-in for a model: answers come from a fixed queue or a
/// routing closure. Token usage is synthesized from whitespace token counts
/// so accounting stays exact and reproducible.
pub struct ScriptedTransport {
    script: Mutex<Script>,
    calls: Mutex<u64>,
}

impl ScriptedTransport {
    pub fn queue(responses: impl IntoIterator<Item = impl Into<String>>) -> Self {
        ScriptedTransport {
            script: Mutex::new(Script::Queue(
                responses.into_iter().map(Into::into).collect(),
            )),
            calls: Mutex::new(0),
        }
    }

    /// The closure receives the request and a zero-based call index; `None`
    /// means the script has nothing left to say.
    pub fn router(f: impl Fn(&ChatRequest, u64) -> Option<String> + Send + Sync + 'static) -> Self {
        ScriptedTransport {
            script: Mutex::new(Script::Router(Box::new(f))),
            calls: Mutex::new(0),
        }
    }
}

impl Transport for ScriptedTransport {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut calls = self.calls.lock().unwrap();
        let index = *calls;
        let content = {
            let mut script = self.script.lock().unwrap();
            match &mut *script {
                Script::Queue(q) => q.pop_front(),
                Script::Router(f) => f(request, index),
            }
        };
        let content = content.ok_or(GatewayError::ScriptExhausted { calls: index })?;
        *calls += 1;
        let prompt_tokens = request
            .messages
            .iter()
            .map(|m| whitespace_tokens(&m.content))
            .sum();
        Ok(ChatResponse {
            completion_tokens: whitespace_tokens(&content),
            content,
            prompt_tokens,
        })
    }
}

/// Where recorded exchanges go.
pub enum CassetteSink {
    File(Mutex<BufWriter<File>>),
    Memory(Arc<Mutex<Vec<ChatExchange>>>),
}

impl CassetteSink {
    pub fn file(path: &Path) -> Result<Self, GatewayError> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        Ok(CassetteSink::File(Mutex::new(BufWriter::new(File::create(
            path,
        )?))))
    }

    pub fn memory(store: Arc<Mutex<Vec<ChatExchange>>>) -> Self {
        CassetteSink::Memory(store)
    }

    fn append(&self, exchange: ChatExchange) -> Result<(), GatewayError> {
        match self {
            CassetteSink::File(w) => {
                let line = serde_json::to_string(&exchange).expect("exchange serializes");
                let mut w = w.lock().unwrap();
                w.write_all(line.as_bytes())?;
                w.write_all(b"\n")?;
                w.flush()?;
                Ok(())
            }
            CassetteSink::Memory(store) => {
                store.lock().unwrap().push(exchange);
                Ok(())
            }
        }
    }
}

/// Loads a JSONL cassette. Lines must each hold one `ChatExchange`.
pub fn read_cassette(path: &Path) -> Result<Vec<ChatExchange>, GatewayError> {
    let reader = BufReader::new(File::open(path)?);
    let mut exchanges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let exchange: ChatExchange =
            serde_json::from_str(&line).map_err(|e| GatewayError::CassetteParse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        exchanges.push(exchange);
    }
    Ok(exchanges)
}

enum Inner {
    /// Live or scripted: requests pass straight to the transport.
    Direct(Box<dyn Transport>),
    /// Like Direct, but every successful exchange is appended to a cassette.
    Record {
        transport: Box<dyn Transport>,
        sink: CassetteSink,
    },
    /// Answers come from a recorded cassette; the cassette itself is never
    /// mutated, only a side consumption mask.
    Replay {
        exchanges: Vec<ChatExchange>,
        consumed: Mutex<Vec<bool>>,
    },
}

/// The single entry point components use to talk to a model. Safe to share
/// across threads; record-mode cassette writes are serialized internally.
pub struct Gateway {
    inner: Inner,
    model: String,
}

impl Gateway {
    pub fn live(transport: HttpTransport, model: impl Into<String>) -> Self {
        Gateway {
            inner: Inner::Direct(Box::new(transport)),
            model: model.into(),
        }
    }

    pub fn scripted_queue(
        responses: impl IntoIterator<Item = impl Into<String>>,
        model: impl Into<String>,
    ) -> Self {
        Gateway {
            inner: Inner::Direct(Box::new(ScriptedTransport::queue(responses))),
            model: model.into(),
        }
    }

    pub fn scripted_router(
        f: impl Fn(&ChatRequest, u64) -> Option<String> + Send + Sync + 'static,
        model: impl Into<String>,
    ) -> Self {
        Gateway {
            inner: Inner::Direct(Box::new(ScriptedTransport::router(f))),
            model: model.into(),
        }
    }

    pub fn record(
        transport: impl Transport + 'static,
        sink: CassetteSink,
        model: impl Into<String>,
    ) -> Self {
        Gateway {
            inner: Inner::Record {
                transport: Box::new(transport),
                sink,
            },
            model: model.into(),
        }
    }

    pub fn replay(exchanges: Vec<ChatExchange>, model: impl Into<String>) -> Self {
        let consumed = vec![false; exchanges.len()];
        Gateway {
            inner: Inner::Replay {
                exchanges,
                consumed: Mutex::new(consumed),
            },
            model: model.into(),
        }
    }

    pub fn replay_file(path: &Path, model: impl Into<String>) -> Result<Self, GatewayError> {
        Ok(Gateway::replay(read_cassette(path)?, model))
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Replay runs zero their clocks so traces are byte-identical.
    pub fn is_replay(&self) -> bool {
        matches!(self.inner, Inner::Replay { .. })
    }

    /// Builds a request against this gateway's model.
    pub fn request(&self, temperature: f64, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            temperature,
            messages,
        }
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        match &self.inner {
            Inner::Direct(t) => t.send(request),
            Inner::Record { transport, sink } => {
                let response = transport.send(request)?;
                sink.append(ChatExchange {
                    request: request.clone(),
                    response: response.clone(),
                    request_digest: canonical_digest(request),
                })?;
                Ok(response)
            }
            Inner::Replay {
                exchanges,
                consumed,
            } => {
                let digest = canonical_digest(request);
                let mut consumed = consumed.lock().unwrap();
                let hit = (0..exchanges.len())
                    .find(|&i| !consumed[i] && exchanges[i].request_digest == digest)
                    .or_else(|| (0..exchanges.len()).find(|&i| !consumed[i]));
                match hit {
                    Some(i) => {
                        consumed[i] = true;
                        Ok(exchanges[i].response.clone())
                    }
                    None => Err(GatewayError::ReplayMiss { digest }),
                }
            }
        }
    }
}

/// Per-run call accountant: enforces the model-call budget and accumulates
/// token usage for the final stats.
#[derive(Debug)]
pub struct CallMeter {
    budget: u64,
    pub llm_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum MeterError {
    #[error("llm call budget exhausted after {calls} calls")]
    BudgetExhausted { calls: u64 },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl CallMeter {
    pub fn new(budget: u64) -> Self {
        CallMeter {
            budget,
            llm_calls: 0,
            prompt_tokens: 0,
            completion_tokens: 0,
        }
    }

    pub fn complete(
        &mut self,
        gateway: &Gateway,
        request: &ChatRequest,
    ) -> Result<ChatResponse, MeterError> {
        if self.llm_calls >= self.budget {
            return Err(MeterError::BudgetExhausted {
                calls: self.llm_calls,
            });
        }
        let response = gateway.complete(request)?;
        self.llm_calls += 1;
        self.prompt_tokens += response.prompt_tokens;
        self.completion_tokens += response.completion_tokens;
        Ok(response)
    }
}
