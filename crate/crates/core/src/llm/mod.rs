//! Prompt rendering, chat-completion calls with retry, reply parsing and a
//! digest-keyed response cache for deterministic replay.

mod backend;
mod cache;
mod parse;
mod template;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use backend::{
    extract_content, BackendError, ChatBackend, ChatMessage, ChatRequest, HttpBackend, MockBackend,
};
pub use cache::{request_digest, CacheEntry, ResponseCache};
pub use parse::{parse_absa_response, parse_kpg_response};
pub use template::{
    kpg_input, render_absa_prompt, render_kpg_prompt, FewShotExample, PromptPart, PromptTemplate,
    TemplateName,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("network error after {attempts} attempt(s): {message}")]
    NetworkError { attempts: u32, message: String },
    #[error("HTTP error status {0}")]
    HttpError(u16),
    #[error("API key environment variable {0} is not set")]
    AuthMissing(String),
    #[error("template mismatch: expected {expected:?}, found {found:?}")]
    TemplateMismatch {
        expected: TemplateName,
        found: TemplateName,
    },
    #[error("invalid template: {0}")]
    Template(String),
    #[error("cluster has no member comments")]
    EmptyCluster,
    #[error("no JSON label found in reply")]
    MalformedJson,
    #[error("unknown polarity {0:?}")]
    UnknownPolarity(String),
    #[error("empty generation")]
    EmptyGeneration,
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("mock backend has no reply for digest {0}")]
    MockMiss(String),
    #[error("cache error: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_retries: u32,
    pub api_key_env_var: String,
    /// Delay before the first retry; doubles on each further attempt.
    pub retry_backoff_ms: u64,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-3.5-turbo".into(),
            temperature: 0.0,
            max_tokens: 512,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            api_key_env_var: "LLM_API_KEY".into(),
            retry_backoff_ms: 500,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0) {
            return Err("temperature must be >= 0".into());
        }
        if self.model_name.trim().is_empty() {
            return Err("model_name must not be empty".into());
        }
        Ok(())
    }

    pub fn request(&self, prompt: &str) -> ChatRequest {
        ChatRequest {
            model: self.model_name.clone(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt.to_string(),
            }],
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

fn backoff(config: &LlmConfig, attempt: u32) -> Duration {
    let factor = 1u64 << attempt.min(16);
    Duration::from_millis(config.retry_backoff_ms.saturating_mul(factor)).min(Duration::from_secs(60))
}

/// Returns the cached reply for `prompt`, or calls the backend (retrying
/// transient failures with exponential backoff) and caches the result.
pub fn complete(
    prompt: &str,
    config: &LlmConfig,
    cache: &ResponseCache,
    backend: &dyn ChatBackend,
) -> Result<String, LlmError> {
    let digest = request_digest(&config.model_name, prompt);
    if let Some(hit) = cache.get(&digest) {
        return Ok(hit.response_text);
    }
    let request = config.request(prompt);
    let mut attempt = 0u32;
    loop {
        match backend.send(&request) {
            Ok(text) => {
                cache.put(&digest, &text)?;
                return Ok(text);
            }
            Err(err) if err.is_retryable() => {
                if attempt >= config.max_retries {
                    return Err(LlmError::NetworkError {
                        attempts: attempt + 1,
                        message: err.to_string(),
                    });
                }
                let delay = backoff(config, attempt);
                log::warn!("LLM request failed ({err}); retrying in {delay:?}");
                std::thread::sleep(delay);
                attempt += 1;
            }
            Err(BackendError::Status(code)) => return Err(LlmError::HttpError(code)),
            Err(BackendError::AuthMissing(var)) => return Err(LlmError::AuthMissing(var)),
            Err(BackendError::NoMockEntry(digest)) => return Err(LlmError::MockMiss(digest)),
            Err(BackendError::Decode(msg)) => return Err(LlmError::Decode(msg)),
            Err(BackendError::Transport(msg)) => {
                return Err(LlmError::NetworkError {
                    attempts: attempt + 1,
                    message: msg,
                })
            }
        }
    }
}

/// A backend, its configuration and a cache, with a bound on concurrent
/// requests.
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    config: LlmConfig,
    cache: ResponseCache,
    parallel: usize,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, config: LlmConfig, cache: ResponseCache) -> Self {
        Gateway {
            backend,
            config,
            cache,
            parallel: 4,
        }
    }

    pub fn with_parallel(mut self, parallel: usize) -> Self {
        self.parallel = parallel.max(1);
        self
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn backend_calls(&self) -> usize {
        self.backend.calls()
    }

    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        complete(prompt, &self.config, &self.cache, self.backend.as_ref())
    }

    /// Completes every prompt with at most `parallel` requests in flight.
    /// Results come back in input order.
    pub fn complete_all(&self, prompts: &[String]) -> Vec<Result<String, LlmError>> {
        let slots: Vec<Mutex<Option<Result<String, LlmError>>>> =
            prompts.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.parallel.min(prompts.len()).max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::SeqCst);
                    let Some(prompt) = prompts.get(idx) else {
                        break;
                    };
                    let result = self.complete(prompt);
                    *slots[idx].lock().expect("result slot") = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| {
                slot.into_inner()
                    .expect("result slot")
                    .expect("every prompt is completed")
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex as StdMutex;

    /// Replays a fixed script of outcomes, then repeats the last one.
    struct Scripted {
        script: StdMutex<Vec<Result<String, BackendError>>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(mut script: Vec<Result<String, BackendError>>) -> Self {
            script.reverse();
            Scripted {
                script: StdMutex::new(script),
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl ChatBackend for Scripted {
        fn send(&self, _: &ChatRequest) -> Result<String, BackendError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut script = self.script.lock().unwrap();
            if script.len() > 1 {
                script.pop().unwrap()
            } else {
                script[0].clone()
            }
        }

        fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    fn fast_config(max_retries: u32) -> LlmConfig {
        LlmConfig {
            model_name: "m".into(),
            max_retries,
            retry_backoff_ms: 0,
            ..LlmConfig::default()
        }
    }

    #[test]
    fn cache_hit_makes_no_backend_call() {
        let cache = ResponseCache::in_memory();
        let config = fast_config(0);
        cache.put(&request_digest("m", "p"), "cached").unwrap();
        let backend = Scripted::new(vec![Err(BackendError::Status(500))]);
        assert_eq!(complete("p", &config, &cache, &backend).unwrap(), "cached");
        assert_eq!(backend.calls(), 0);
    }

    #[test]
    fn persistent_500_exhausts_retries() {
        let backend = Scripted::new(vec![Err(BackendError::Status(500))]);
        let err = complete("p", &fast_config(2), &ResponseCache::in_memory(), &backend).unwrap_err();
        assert!(matches!(err, LlmError::NetworkError { attempts: 3, .. }), "{err:?}");
        assert_eq!(backend.calls(), 3);
    }

    #[test]
    fn transient_failure_then_success_is_cached() {
        let backend = Scripted::new(vec![
            Err(BackendError::Transport("reset".into())),
            Ok("fine".into()),
        ]);
        let cache = ResponseCache::in_memory();
        assert_eq!(complete("p", &fast_config(2), &cache, &backend).unwrap(), "fine");
        assert_eq!(backend.calls(), 2);
        assert_eq!(complete("p", &fast_config(2), &cache, &backend).unwrap(), "fine");
        assert_eq!(backend.calls(), 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let backend = Scripted::new(vec![Err(BackendError::Status(400))]);
        let err = complete("p", &fast_config(5), &ResponseCache::in_memory(), &backend).unwrap_err();
        assert_eq!(err, LlmError::HttpError(400));
        assert_eq!(backend.calls(), 1);
    }

    #[test]
    fn auth_missing_surfaces() {
        let backend = Scripted::new(vec![Err(BackendError::AuthMissing("LLM_API_KEY".into()))]);
        let err = complete("p", &fast_config(5), &ResponseCache::in_memory(), &backend).unwrap_err();
        assert_eq!(err, LlmError::AuthMissing("LLM_API_KEY".into()));
    }

    #[test]
    fn complete_all_preserves_input_order() {
        let mut mock = MockBackend::new();
        let prompts: Vec<String> = (0..20).map(|i| format!("prompt {i}")).collect();
        for (i, p) in prompts.iter().enumerate() {
            mock.insert("m", p, format!("reply {i}"));
        }
        let gateway = Gateway::new(Arc::new(mock), fast_config(0), ResponseCache::in_memory())
            .with_parallel(4);
        let replies = gateway.complete_all(&prompts);
        for (i, r) in replies.into_iter().enumerate() {
            assert_eq!(r.unwrap(), format!("reply {i}"));
        }
        assert_eq!(gateway.backend_calls(), 20);
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = LlmConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: LlmConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: LlmConfig = toml::from_str("model_name = \"x\"\ntimeout = 2.5").unwrap();
        assert_eq!(partial.timeout, Duration::from_millis(2500));
        assert_eq!(partial.max_retries, 3);
    }
}
