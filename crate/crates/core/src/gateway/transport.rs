use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("{0}")]
    Other(String),
}

/// The HTTP surface the gateway needs. Implemented over reqwest for real
/// use; tests inject canned or fail-on-use transports.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError>;

    fn get(&self, url: &str, _bearer: Option<&str>, _timeout: Duration) -> Result<HttpReply, TransportError> {
        Err(TransportError::Other(format!("GET not supported by this transport: {url}")))
    }
}

#[derive(Debug, Clone, Default)]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> HttpTransport {
        HttpTransport {
            client: reqwest::blocking::Client::new(),
        }
    }

    fn finish(result: reqwest::Result<reqwest::blocking::Response>) -> Result<HttpReply, TransportError> {
        let resp = result.map_err(map_err)?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(map_err)?;
        Ok(HttpReply { status, body })
    }
}

fn map_err(e: reqwest::Error) -> TransportError {
    if e.is_timeout() {
        TransportError::Timeout
    } else if e.is_connect() {
        TransportError::Connect(e.to_string())
    } else {
        TransportError::Other(e.to_string())
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(key) = bearer {
            req = req.bearer_auth(key);
        }
        Self::finish(req.send())
    }

    fn get(&self, url: &str, bearer: Option<&str>, timeout: Duration) -> Result<HttpReply, TransportError> {
        let mut req = self.client.get(url).timeout(timeout);
        if let Some(key) = bearer {
            req = req.bearer_auth(key);
        }
        Self::finish(req.send())
    }
}

/// Wraps assistant text in a minimal chat-completions reply body.
pub fn chat_reply_body(content: &str) -> String {
    serde_json::json!({
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

/// Answers POSTs from a fixed script of assistant replies, repeating the last
/// one once the script runs out. Records every request body it receives.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    replies: Vec<String>,
    seen: std::sync::Mutex<Vec<Value>>,
}

impl ScriptedTransport {
    pub fn new<I, S>(replies: I) -> ScriptedTransport
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedTransport {
            replies: replies.into_iter().map(Into::into).collect(),
            seen: Default::default(),
        }
    }

    pub fn calls(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    /// Request bodies in arrival order.
    pub fn requests(&self) -> Vec<Value> {
        self.seen.lock().unwrap().clone()
    }
}

impl Transport for ScriptedTransport {
    fn post_json(&self, _url: &str, _bearer: Option<&str>, body: &Value, _timeout: Duration) -> Result<HttpReply, TransportError> {
        let mut seen = self.seen.lock().unwrap();
        let n = seen.len();
        seen.push(body.clone());
        let content = self
            .replies
            .get(n)
            .or(self.replies.last())
            .ok_or_else(|| TransportError::Other("scripted transport has no replies".into()))?;
        Ok(HttpReply {
            status: 200,
            body: chat_reply_body(content),
        })
    }
}

/// Refuses every request. Used to prove that replay runs stay offline.
#[derive(Debug, Default)]
pub struct FailOnUseTransport {
    attempts: std::sync::atomic::AtomicUsize,
}

impl FailOnUseTransport {
    pub fn attempts(&self) -> usize {
        self.attempts.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl Transport for FailOnUseTransport {
    fn post_json(&self, url: &str, _bearer: Option<&str>, _body: &Value, _timeout: Duration) -> Result<HttpReply, TransportError> {
        self.attempts.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Err(TransportError::Other(format!("network access forbidden: POST {url}")))
    }

    fn get(&self, url: &str, _bearer: Option<&str>, _timeout: Duration) -> Result<HttpReply, TransportError> {
        self.attempts.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Err(TransportError::Other(format!("network access forbidden: GET {url}")))
    }
}
