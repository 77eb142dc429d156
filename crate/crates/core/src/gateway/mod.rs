//! Chat-completion client for OpenAI-compatible endpoints (ollama, vLLM,
//! hosted services) with a content-addressed response cache.
//!
//! The cache has three modes: `record` serves hits and persists misses,
//! `replay` serves hits and fails on misses without touching the network,
//! and `off` always calls the endpoint.

mod cache;
mod transport;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use cache::{cache_key, CacheEntry, ResponseCache};
pub use transport::{
    chat_reply_body, FailOnUseTransport, HttpReply, HttpTransport, ScriptedTransport, Transport, TransportError,
};

/// Default bound on simultaneous requests per gateway.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub timeout_s: u64,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> ModelEndpoint {
        ModelEndpoint {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: None,
            timeout_s: 120,
            temperature: 0.0,
            max_tokens: Some(512),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.base_url.trim().is_empty() {
            return Err(GatewayError::InvalidEndpoint("base_url is empty".into()));
        }
        if self.timeout_s == 0 {
            return Err(GatewayError::InvalidEndpoint("timeout_s must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::InvalidEndpoint("temperature must be >= 0".into()));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/v1") {
            format!("{base}/chat/completions")
        } else {
            format!("{base}/v1/chat/completions")
        }
    }

    pub fn models_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/v1") {
            format!("{base}/models")
        } else {
            format!("{base}/v1/models")
        }
    }

    /// A request with this endpoint's sampling parameters.
    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            messages,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(GatewayError::InvalidRequest("at least one user message is required".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::InvalidRequest("temperature must be >= 0".into()));
        }
        Ok(())
    }

    /// One-line description used in replay-miss errors.
    pub fn summary(&self, model_name: &str) -> String {
        let last_user = self
            .messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or_default();
        let first_line = last_user.lines().next().unwrap_or_default();
        let mut head: String = first_line.chars().take(80).collect();
        if head.len() < first_line.len() || last_user.lines().nth(1).is_some() {
            head.push_str("...");
        }
        format!(
            "model={model_name} messages={} temperature={} max_tokens={} prompt=\"{head}\"",
            self.messages.len(),
            self.temperature,
            self.max_tokens.map_or("none".to_string(), |n| n.to_string()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    /// Assistant text only.
    pub content: String,
    pub model_name: String,
    pub cache_hit: bool,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    #[default]
    Record,
    Replay,
    Off,
}

impl FromStr for CacheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record" => Ok(CacheMode::Record),
            "replay" => Ok(CacheMode::Replay),
            "off" => Ok(CacheMode::Off),
            other => Err(format!("unknown cache mode \"{other}\" (expected record, replay or off)")),
        }
    }
}

impl fmt::Display for CacheMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CacheMode::Record => "record",
            CacheMode::Replay => "replay",
            CacheMode::Off => "off",
        })
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("environment variable {0} (llm.api_key_env) is not set")]
    MissingApiKey(String),
    #[error("could not reach {url}: {source}")]
    Transport {
        url: String,
        #[source]
        source: TransportError,
    },
    #[error("endpoint returned HTTP {status}: {excerpt}")]
    Status { status: u16, excerpt: String },
    #[error("endpoint response is not a chat completion: {0}")]
    MalformedResponse(String),
    #[error("endpoint response has no choices")]
    MissingChoices,
    #[error("endpoint returned empty content")]
    EmptyContent,
    #[error("replay cache has no entry {digest} for {summary}")]
    ReplayMiss { digest: String, summary: String },
    #[error("a cache directory is required in {0} mode")]
    NoCacheDir(CacheMode),
    #[error("cache I/O error on {path}: {message}")]
    CacheIo { path: String, message: String },
}

/// Blocks callers once `limit` requests are outstanding.
#[derive(Debug)]
struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(limit: usize) -> InFlight {
        InFlight {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// An endpoint plus transport, cache and concurrency bound.
pub struct Gateway {
    endpoint: ModelEndpoint,
    transport: Arc<dyn Transport>,
    cache: Option<ResponseCache>,
    mode: CacheMode,
    in_flight: InFlight,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("endpoint", &self.endpoint)
            .field("cache", &self.cache)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    /// A gateway using HTTP and the given cache mode. `cache_dir` may be
    /// omitted only in `off` mode.
    pub fn new(
        endpoint: ModelEndpoint,
        cache_dir: Option<std::path::PathBuf>,
        mode: CacheMode,
    ) -> Result<Gateway, GatewayError> {
        Gateway::with_transport(endpoint, Arc::new(HttpTransport::new()), cache_dir, mode)
    }

    pub fn with_transport(
        endpoint: ModelEndpoint,
        transport: Arc<dyn Transport>,
        cache_dir: Option<std::path::PathBuf>,
        mode: CacheMode,
    ) -> Result<Gateway, GatewayError> {
        if mode != CacheMode::Replay {
            endpoint.validate()?;
        }
        let cache = match (cache_dir, mode) {
            (Some(dir), _) => Some(ResponseCache::new(dir)),
            (None, CacheMode::Off) => None,
            (None, m) => return Err(GatewayError::NoCacheDir(m)),
        };
        Ok(Gateway {
            endpoint,
            transport,
            cache,
            mode,
            in_flight: InFlight::new(DEFAULT_MAX_IN_FLIGHT),
        })
    }

    pub fn with_max_in_flight(mut self, limit: usize) -> Gateway {
        self.in_flight = InFlight::new(limit);
        self
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn model_name(&self) -> &str {
        &self.endpoint.model_name
    }

    /// A request carrying this gateway's sampling parameters.
    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        self.endpoint.request(messages)
    }

    /// Sends `request` to the endpoint, bypassing the cache.
    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let _slot = self.in_flight.acquire();
        complete_with(&self.endpoint, self.transport.as_ref(), request)
    }

    /// Serves `request` according to the gateway's cache mode.
    pub fn cached_complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let Some(cache) = self.cache.as_ref().filter(|_| self.mode != CacheMode::Off) else {
            return self.complete(request);
        };
        let started = Instant::now();
        let key = cache_key(&self.endpoint.model_name, request);
        if let Some(entry) = cache.get(&key)? {
            return Ok(ChatResponse {
                content: entry.response_content,
                model_name: self.endpoint.model_name.clone(),
                cache_hit: true,
                latency_ms: started.elapsed().as_millis() as u64,
            });
        }
        match self.mode {
            CacheMode::Replay => Err(GatewayError::ReplayMiss {
                digest: key,
                summary: request.summary(&self.endpoint.model_name),
            }),
            _ => {
                let response = self.complete(request)?;
                cache.put(&key, &self.endpoint.model_name, request, &response.content)?;
                Ok(response)
            }
        }
    }

    /// Checks that the endpoint answers `GET /v1/models`.
    pub fn probe(&self) -> Result<(), GatewayError> {
        let url = self.endpoint.models_url();
        let key = resolve_api_key(&self.endpoint)?;
        let reply = self
            .transport
            .get(&url, key.as_deref(), Duration::from_secs(self.endpoint.timeout_s.min(10)))
            .map_err(|source| GatewayError::Transport { url, source })?;
        if !(200..300).contains(&reply.status) {
            return Err(GatewayError::Status {
                status: reply.status,
                excerpt: body_excerpt(&reply.body),
            });
        }
        Ok(())
    }
}

/// Sends one chat completion over HTTP, no cache.
pub fn complete(endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
    endpoint.validate()?;
    request.validate()?;
    complete_with(endpoint, &HttpTransport::new(), request)
}

fn resolve_api_key(endpoint: &ModelEndpoint) -> Result<Option<String>, GatewayError> {
    match &endpoint.api_key_env {
        Some(var) => std::env::var(var)
            .map(Some)
            .map_err(|_| GatewayError::MissingApiKey(var.clone())),
        None => Ok(None),
    }
}

/// The OpenAI chat-completions request body.
pub fn request_body(model_name: &str, request: &ChatRequest) -> Value {
    let mut body = json!({
        "model": model_name,
        "messages": request.messages,
        "temperature": request.temperature,
    });
    if let Some(n) = request.max_tokens {
        body["max_tokens"] = json!(n);
    }
    body
}

fn complete_with(
    endpoint: &ModelEndpoint,
    transport: &dyn Transport,
    request: &ChatRequest,
) -> Result<ChatResponse, GatewayError> {
    let key = resolve_api_key(endpoint)?;
    let url = endpoint.completions_url();
    let body = request_body(&endpoint.model_name, request);
    let started = Instant::now();
    let reply = transport
        .post_json(&url, key.as_deref(), &body, Duration::from_secs(endpoint.timeout_s))
        .map_err(|source| GatewayError::Transport { url, source })?;
    let latency_ms = started.elapsed().as_millis() as u64;
    if !(200..300).contains(&reply.status) {
        return Err(GatewayError::Status {
            status: reply.status,
            excerpt: body_excerpt(&reply.body),
        });
    }
    let parsed: Value =
        serde_json::from_str(&reply.body).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    let choice = parsed
        .get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .ok_or(GatewayError::MissingChoices)?;
    let content = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .unwrap_or_default();
    if content.trim().is_empty() {
        return Err(GatewayError::EmptyContent);
    }
    Ok(ChatResponse {
        content: content.to_string(),
        model_name: endpoint.model_name.clone(),
        cache_hit: false,
        latency_ms,
    })
}

fn body_excerpt(body: &str) -> String {
    let t = body.trim();
    let cut: String = t.chars().take(300).collect();
    if cut.len() < t.len() {
        format!("{cut}...")
    } else {
        cut
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Answers every POST with a canned reply and counts calls.
    struct Canned {
        status: u16,
        body: String,
        calls: AtomicUsize,
        last_body: Mutex<Option<Value>>,
    }

    impl Canned {
        fn ok(content: &str) -> Arc<Canned> {
            Arc::new(Canned {
                status: 200,
                body: json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string(),
                calls: AtomicUsize::new(0),
                last_body: Mutex::new(None),
            })
        }
    }

    impl Transport for Canned {
        fn post_json(&self, _url: &str, _bearer: Option<&str>, body: &Value, _t: Duration) -> Result<HttpReply, TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            *self.last_body.lock().unwrap() = Some(body.clone());
            Ok(HttpReply {
                status: self.status,
                body: self.body.clone(),
            })
        }
    }

    struct FailOnUse;

    impl Transport for FailOnUse {
        fn post_json(&self, url: &str, _: Option<&str>, _: &Value, _: Duration) -> Result<HttpReply, TransportError> {
            panic!("network used in replay mode: {url}");
        }
    }

    fn endpoint() -> ModelEndpoint {
        ModelEndpoint::new("http://localhost:11434", "codellama")
    }

    fn req(text: &str) -> ChatRequest {
        endpoint().request(vec![ChatMessage::user(text)])
    }

    #[test]
    fn posts_openai_shaped_body() {
        let t = Canned::ok("hello");
        let gw = Gateway::with_transport(endpoint(), t.clone(), None, CacheMode::Off).unwrap();
        let r = gw.complete(&req("hi")).unwrap();
        assert_eq!(r.content, "hello");
        assert!(!r.cache_hit);
        let body = t.last_body.lock().unwrap().clone().unwrap();
        assert_eq!(body["model"], "codellama");
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["max_tokens"], 512);
    }

    #[test]
    fn non_2xx_carries_status() {
        let t = Arc::new(Canned {
            status: 500,
            body: "boom".into(),
            calls: AtomicUsize::new(0),
            last_body: Mutex::new(None),
        });
        let gw = Gateway::with_transport(endpoint(), t, None, CacheMode::Off).unwrap();
        let err = gw.complete(&req("hi")).unwrap_err();
        assert!(matches!(err, GatewayError::Status { status: 500, ref excerpt } if excerpt == "boom"));
    }

    #[test]
    fn missing_choices_and_empty_content() {
        for (body, want_missing) in [(json!({"choices": []}), true), (json!({"choices": [{"message": {"content": "  "}}]}), false)] {
            let t = Arc::new(Canned {
                status: 200,
                body: body.to_string(),
                calls: AtomicUsize::new(0),
                last_body: Mutex::new(None),
            });
            let gw = Gateway::with_transport(endpoint(), t, None, CacheMode::Off).unwrap();
            let err = gw.complete(&req("hi")).unwrap_err();
            if want_missing {
                assert!(matches!(err, GatewayError::MissingChoices));
            } else {
                assert!(matches!(err, GatewayError::EmptyContent));
            }
        }
    }

    #[test]
    fn record_then_hit() {
        let dir = tempfile::tempdir().unwrap();
        let t = Canned::ok("answer");
        let gw = Gateway::with_transport(endpoint(), t.clone(), Some(dir.path().into()), CacheMode::Record).unwrap();
        let first = gw.cached_complete(&req("q")).unwrap();
        let second = gw.cached_complete(&req("q")).unwrap();
        assert!(!first.cache_hit);
        assert!(second.cache_hit);
        assert_eq!(first.content, second.content);
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn replay_miss_never_touches_network() {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::with_transport(endpoint(), Arc::new(FailOnUse), Some(dir.path().into()), CacheMode::Replay).unwrap();
        let err = gw.cached_complete(&req("q")).unwrap_err();
        match err {
            GatewayError::ReplayMiss { digest, summary } => {
                assert_eq!(digest, cache_key("codellama", &req("q")));
                assert!(summary.contains("model=codellama"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn replay_serves_recorded_entry() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Gateway::with_transport(endpoint(), Canned::ok("kept"), Some(dir.path().into()), CacheMode::Record).unwrap();
        rec.cached_complete(&req("q")).unwrap();
        let rep = Gateway::with_transport(endpoint(), Arc::new(FailOnUse), Some(dir.path().into()), CacheMode::Replay).unwrap();
        let r = rep.cached_complete(&req("q")).unwrap();
        assert!(r.cache_hit);
        assert_eq!(r.content, "kept");
    }

    #[test]
    fn off_mode_always_calls() {
        let dir = tempfile::tempdir().unwrap();
        let t = Canned::ok("x");
        let gw = Gateway::with_transport(endpoint(), t.clone(), Some(dir.path().into()), CacheMode::Off).unwrap();
        gw.cached_complete(&req("q")).unwrap();
        gw.cached_complete(&req("q")).unwrap();
        assert_eq!(t.calls.load(Ordering::SeqCst), 2);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn record_requires_cache_dir() {
        assert!(matches!(
            Gateway::with_transport(endpoint(), Canned::ok("x"), None, CacheMode::Record),
            Err(GatewayError::NoCacheDir(CacheMode::Record))
        ));
    }

    #[test]
    fn request_needs_a_user_message() {
        let r = endpoint().request(vec![ChatMessage::system("s")]);
        assert!(matches!(r.validate(), Err(GatewayError::InvalidRequest(_))));
    }

    #[test]
    fn missing_api_key_env_is_reported() {
        let mut ep = endpoint();
        ep.api_key_env = Some("WARNFORGE_TEST_UNSET_KEY_VAR".into());
        let gw = Gateway::with_transport(ep, Canned::ok("x"), None, CacheMode::Off).unwrap();
        assert!(matches!(gw.complete(&req("q")), Err(GatewayError::MissingApiKey(_))));
    }

    #[test]
    fn endpoint_validation_and_urls() {
        let mut ep = endpoint();
        assert_eq!(ep.completions_url(), "http://localhost:11434/v1/chat/completions");
        ep.base_url = "https://api.example.com/v1/".into();
        assert_eq!(ep.completions_url(), "https://api.example.com/v1/chat/completions");
        ep.timeout_s = 0;
        assert!(ep.validate().is_err());
        let mut ep = endpoint();
        ep.temperature = -0.1;
        assert!(ep.validate().is_err());
    }

    #[test]
    fn in_flight_bound_is_respected() {
        use std::sync::atomic::AtomicUsize;
        struct Slow {
            now: AtomicUsize,
            peak: AtomicUsize,
        }
        impl Transport for Slow {
            fn post_json(&self, _: &str, _: Option<&str>, _: &Value, _: Duration) -> Result<HttpReply, TransportError> {
                let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(n, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(30));
                self.now.fetch_sub(1, Ordering::SeqCst);
                Ok(HttpReply {
                    status: 200,
                    body: json!({"choices": [{"message": {"content": "ok"}}]}).to_string(),
                })
            }
        }
        let t = Arc::new(Slow {
            now: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let gw = Gateway::with_transport(endpoint(), t.clone(), None, CacheMode::Off).unwrap();
        std::thread::scope(|s| {
            for i in 0..6 {
                let gw = &gw;
                s.spawn(move || gw.complete(&req(&format!("q{i}"))).unwrap());
            }
        });
        assert!(t.peak.load(Ordering::SeqCst) <= DEFAULT_MAX_IN_FLIGHT);
    }
}
