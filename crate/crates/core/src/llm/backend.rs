//! Chat-completion transports: an OpenAI-compatible HTTP client and a
//! table-driven mock used for tests and offline runs.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cache::request_digest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// OpenAI-compatible chat-completion request body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn user_prompt(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("environment variable {0} is not set")]
    AuthMissing(String),
    #[error("unexpected response body: {0}")]
    Decode(String),
    #[error("no canned response for digest {0}")]
    NoMockEntry(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status(code) => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, BackendError>;

    /// Number of requests this backend has attempted.
    fn calls(&self) -> usize;
}

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint_url: String,
    api_key_env_var: String,
    calls: AtomicUsize,
}

impl HttpBackend {
    pub fn new(
        endpoint_url: impl Into<String>,
        api_key_env_var: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            client,
            endpoint_url: endpoint_url.into(),
            api_key_env_var: api_key_env_var.into(),
            calls: AtomicUsize::new(0),
        })
    }
}

/// Pulls `choices[0].message.content` out of a chat-completion response.
pub fn extract_content(body: &Value) -> Result<String, BackendError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::Decode(body.to_string()))
}

impl ChatBackend for HttpBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let key = std::env::var(&self.api_key_env_var)
            .map_err(|_| BackendError::AuthMissing(self.api_key_env_var.clone()))?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let response = self
            .client
            .post(&self.endpoint_url)
            .bearer_auth(key)
            .json(request)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Status(status.as_u16()));
        }
        let body: Value = response
            .json()
            .map_err(|e| BackendError::Decode(e.to_string()))?;
        extract_content(&body)
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Maps request digests to canned replies. Unknown prompts fail with
/// [`BackendError::NoMockEntry`].
#[derive(Debug, Default)]
pub struct MockBackend {
    table: HashMap<String, String>,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_table(table: HashMap<String, String>) -> Self {
        MockBackend {
            table,
            calls: AtomicUsize::new(0),
        }
    }

    /// Loads a JSON object `{digest: reply}`.
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let table: HashMap<String, String> = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(Self::from_table(table))
    }

    pub fn insert(&mut self, model_name: &str, prompt: &str, reply: impl Into<String>) {
        self.table
            .insert(request_digest(model_name, prompt), reply.into());
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// The table as sorted JSON, suitable for checking in.
    pub fn to_json(&self) -> String {
        let sorted: BTreeMap<&String, &String> = self.table.iter().collect();
        serde_json::to_string_pretty(&sorted).expect("serializable table") + "\n"
    }
}

impl ChatBackend for MockBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let digest = request_digest(&request.model, request.user_prompt());
        self.table
            .get(&digest)
            .cloned()
            .ok_or(BackendError::NoMockEntry(digest))
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}
