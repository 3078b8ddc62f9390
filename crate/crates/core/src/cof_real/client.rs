//! Text-generation clients: an offline replay client backed by fixtures and
//! a chat-completions HTTP client with retry.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError};

pub const ENDPOINT_VAR: &str = "COF_LLM_ENDPOINT";
pub const KEY_VAR: &str = "COF_LLM_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub video_id: String,
    pub prompt: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub video_id: String,
    pub text: String,
    pub provider_tag: String,
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("provider error (status {status:?}): {message}")]
    Provider { status: Option<u16>, message: String },
    #[error("no replay fixture for key {0:?}")]
    ReplayMiss(String),
    #[error("client configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fixtures(#[from] JsonlError),
}

pub trait GenerationClient: Send + Sync {
    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResponse, GenerationError>;
}

/// One replay fixture line: `{"key": ..., "text": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayRecord {
    pub key: String,
    pub text: String,
}

/// Answers from stored completions keyed by video ID.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    fixtures: HashMap<String, String>,
}

impl ReplayClient {
    pub fn from_records(records: impl IntoIterator<Item = ReplayRecord>) -> Self {
        ReplayClient {
            fixtures: records.into_iter().map(|r| (r.key, r.text)).collect(),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, GenerationError> {
        Ok(Self::from_records(jsonl::read::<ReplayRecord>(path)?))
    }
}

impl GenerationClient for ReplayClient {
    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResponse, GenerationError> {
        let text = self
            .fixtures
            .get(&request.video_id)
            .ok_or_else(|| GenerationError::ReplayMiss(request.video_id.clone()))?;
        Ok(GenerationResponse {
            video_id: request.video_id.clone(),
            text: text.clone(),
            provider_tag: "replay".to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub max_attempts: u32,
    pub base_backoff: Duration,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            api_key: None,
            model: model.into(),
            max_attempts: 3,
            base_backoff: Duration::from_secs(1),
            timeout: Duration::from_secs(120),
        }
    }

    /// Endpoint from `COF_LLM_ENDPOINT`, key (optional) from `COF_LLM_KEY`.
    pub fn from_env(model: impl Into<String>) -> Result<Self, GenerationError> {
        let endpoint = std::env::var(ENDPOINT_VAR)
            .map_err(|_| GenerationError::Config(format!("{ENDPOINT_VAR} is not set")))?;
        let mut cfg = Self::new(endpoint, model);
        cfg.api_key = std::env::var(KEY_VAR).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

/// Chat-completions client. Transport failures, 429 and 5xx responses are
/// retried with exponential backoff; other failures surface immediately.
pub struct RemoteClient {
    config: RemoteConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Done(String),
    Transient(GenerationError),
    Fatal(GenerationError),
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        RemoteClient { config, agent }
    }

    fn attempt(&self, request: &GenerationRequest) -> Attempt {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            max_tokens: request.max_new_tokens,
        };
        let mut call = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match call.send_json(&body) {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Transient(GenerationError::Provider {
                    status: None,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status().as_u16();
        if status != 200 {
            let message = response.body_mut().read_to_string().unwrap_or_default();
            let err = GenerationError::Provider {
                status: Some(status),
                message,
            };
            return if status == 429 || status >= 500 {
                Attempt::Transient(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        let parsed: Result<ChatResponse, _> = response.body_mut().read_json();
        match parsed {
            Ok(r) => match r.choices.into_iter().next().and_then(|c| c.message.content) {
                Some(text) => Attempt::Done(text),
                None => Attempt::Fatal(GenerationError::Provider {
                    status: Some(status),
                    message: "response has no message content".into(),
                }),
            },
            Err(e) => Attempt::Fatal(GenerationError::Provider {
                status: Some(status),
                message: format!("unreadable response body: {e}"),
            }),
        }
    }
}

impl GenerationClient for RemoteClient {
    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResponse, GenerationError> {
        let mut last = None;
        for attempt in 0..self.config.max_attempts.max(1) {
            if attempt > 0 {
                thread::sleep(self.config.base_backoff * 2u32.pow(attempt - 1));
            }
            match self.attempt(request) {
                Attempt::Done(text) => {
                    return Ok(GenerationResponse {
                        video_id: request.video_id.clone(),
                        text,
                        provider_tag: format!("remote:{}", self.config.model),
                    })
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(e) => {
                    log::warn!("{}: attempt {} failed: {e}", request.video_id, attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

/// Runs every request with at most `max_in_flight` concurrent calls. Results
/// come back in request order regardless of completion order.
pub fn generate_all(
    client: &dyn GenerationClient,
    requests: &[GenerationRequest],
    max_in_flight: usize,
) -> Vec<Result<GenerationResponse, GenerationError>> {
    let slots: Vec<Mutex<Option<Result<GenerationResponse, GenerationError>>>> =
        requests.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = max_in_flight.clamp(1, requests.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = requests.get(idx) else {
                    break;
                };
                let result = client.complete(req);
                *slots[idx].lock().expect("slot lock") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every request ran"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: &str) -> GenerationRequest {
        GenerationRequest {
            video_id: id.into(),
            prompt: "p".into(),
            max_new_tokens: 16,
            temperature: 0.0,
        }
    }

    #[test]
    fn replay_known_and_unknown_keys() {
        let client = ReplayClient::from_records([ReplayRecord {
            key: "vid1".into(),
            text: "fixture text".into(),
        }]);
        let resp = client.complete(&req("vid1")).unwrap();
        assert_eq!(resp.text, "fixture text");
        assert_eq!(resp.provider_tag, "replay");
        assert!(matches!(client.complete(&req("nope")), Err(GenerationError::ReplayMiss(k)) if k == "nope"));
    }

    struct SlowEcho;

    impl GenerationClient for SlowEcho {
        fn complete(&self, request: &GenerationRequest) -> Result<GenerationResponse, GenerationError> {
            // later requests finish first
            let n: u64 = request.video_id.parse().unwrap();
            thread::sleep(Duration::from_millis(20 - n));
            Ok(GenerationResponse {
                video_id: request.video_id.clone(),
                text: format!("t{n}"),
                provider_tag: "echo".into(),
            })
        }
    }

    #[test]
    fn batch_results_keep_request_order() {
        let requests: Vec<GenerationRequest> = (0..12).map(|i| req(&i.to_string())).collect();
        let out = generate_all(&SlowEcho, &requests, 4);
        let texts: Vec<String> = out.into_iter().map(|r| r.unwrap().text).collect();
        let expected: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
        assert_eq!(texts, expected);
    }
}
