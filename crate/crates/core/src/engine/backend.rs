//! Extraction backends: a chat-completion HTTP endpoint, the rule-based
//! extractor, and recorded responses.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::ReportPair;
use crate::oracle::{extract_pair, OracleConfig};

pub const DEFAULT_MODEL: &str = "qwen2.5:72b-instruct-q4_K_M";
/// Environment variable holding an optional bearer token for live endpoints.
pub const API_KEY_ENV: &str = "RECIST_TRACK_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    #[default]
    Oracle,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: usize,
    pub request_timeout_secs: f64,
    pub max_inflight: usize,
    /// Fixture directory for the replay backend.
    pub replay_dir: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Oracle,
            endpoint_url: None,
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_retries: 3,
            request_timeout_secs: 300.0,
            max_inflight: 4,
            replay_dir: None,
        }
    }
}

impl BackendConfig {
    pub fn check(&self) -> Result<(), BackendError> {
        match self.kind {
            BackendKind::Live if self.endpoint_url.is_none() => Err(BackendError::Config(
                "live backend requires endpoint_url".into(),
            )),
            BackendKind::Replay if self.replay_dir.is_none() => Err(BackendError::Config(
                "replay backend requires replay_dir".into(),
            )),
            _ if self.max_inflight == 0 => Err(BackendError::Config(
                "max_inflight must be at least 1".into(),
            )),
            _ if !self.request_timeout_secs.is_finite() || self.request_timeout_secs <= 0.0 => Err(
                BackendError::Config("request_timeout_secs must be positive".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request timed out after {secs} s")]
    Timeout { secs: f64 },
    #[error("endpoint {url} unreachable: {message}")]
    EndpointUnreachable { url: String, message: String },
    #[error("endpoint returned HTTP {code}")]
    NonSuccessStatus { code: u16 },
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("no recorded response for {pair_id} attempt {attempt}")]
    ReplayMiss { pair_id: String, attempt: usize },
    #[error("replay fixture {path}: {source}")]
    ReplayRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        ChatMessage {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// Everything a backend may need for one call.
#[derive(Debug, Clone, Copy)]
pub struct BackendRequest<'a> {
    pub pair: &'a ReportPair,
    pub pair_id: &'a str,
    /// 0-based attempt index within the repair loop.
    pub attempt: usize,
    pub messages: &'a [ChatMessage],
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError>;
}

/// Canonical JSON of the rule-based extraction.
#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    pub config: OracleConfig,
}

impl Backend for OracleBackend {
    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError> {
        Ok(extract_pair(request.pair, &self.config).to_canonical_json())
    }
}

/// Recorded responses stored as `<dir>/<pair_id>.<attempt>.txt`. Pair ids
/// contain slashes, so fixtures live in nested directories.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    dir: PathBuf,
    jitter_ms: u64,
    seed: u64,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayBackend {
            dir: dir.into(),
            jitter_ms: 0,
            seed: 0,
        }
    }

    /// Sleeps a pseudo-random 0..=`max_ms` before each response, to shuffle
    /// completion order in concurrency tests.
    pub fn with_jitter(mut self, max_ms: u64, seed: u64) -> Self {
        self.jitter_ms = max_ms;
        self.seed = seed;
        self
    }

    pub fn fixture_path(dir: &Path, pair_id: &str, attempt: usize) -> PathBuf {
        dir.join(format!("{pair_id}.{attempt}.txt"))
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError> {
        if self.jitter_ms > 0 {
            let mut h = DefaultHasher::new();
            (self.seed, request.pair_id, request.attempt).hash(&mut h);
            thread::sleep(Duration::from_millis(h.finish() % (self.jitter_ms + 1)));
        }
        let path = Self::fixture_path(&self.dir, request.pair_id, request.attempt);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(BackendError::ReplayMiss {
                pair_id: request.pair_id.to_string(),
                attempt: request.attempt,
            }),
            Err(source) => Err(BackendError::ReplayRead { path, source }),
        }
    }
}

/// Chat-completion endpoint over plain HTTP.
#[derive(Debug, Clone)]
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    temperature: f64,
    timeout_secs: f64,
    api_key: Option<String>,
}

impl LiveBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        let url = cfg
            .endpoint_url
            .clone()
            .ok_or_else(|| BackendError::Config("live backend requires endpoint_url".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.request_timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(LiveBackend {
            client,
            url,
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            timeout_secs: cfg.request_timeout_secs,
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
        })
    }
}

/// Assistant text from an OpenAI-style or Ollama-style chat response.
pub fn response_text(body: &Value) -> Option<&str> {
    body.pointer("/choices/0/message/content")
        .or_else(|| body.pointer("/message/content"))
        .and_then(Value::as_str)
}

impl Backend for LiveBackend {
    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError> {
        let payload = json!({
            "model": self.model,
            "messages": request.messages,
            "temperature": self.temperature,
            "stream": false,
        });
        let mut req = self.client.post(&self.url).json(&payload);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout {
                    secs: self.timeout_secs,
                }
            } else {
                BackendError::EndpointUnreachable {
                    url: self.url.clone(),
                    message: e.to_string(),
                }
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::NonSuccessStatus {
                code: status.as_u16(),
            });
        }
        let body: Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout {
                    secs: self.timeout_secs,
                }
            } else {
                BackendError::MalformedResponse(e.to_string())
            }
        })?;
        response_text(&body)
            .map(str::to_string)
            .ok_or_else(|| BackendError::MalformedResponse("no assistant message content".into()))
    }
}

/// Instantiates the backend described by `cfg`.
pub fn make_backend(
    cfg: &BackendConfig,
    oracle: &OracleConfig,
) -> Result<Box<dyn Backend>, BackendError> {
    cfg.check()?;
    Ok(match cfg.kind {
        BackendKind::Live => Box::new(LiveBackend::new(cfg)?),
        BackendKind::Oracle => Box::new(OracleBackend {
            config: oracle.clone(),
        }),
        BackendKind::Replay => {
            Box::new(ReplayBackend::new(cfg.replay_dir.clone().expect("checked")))
        }
    })
}
