//! HTTP JSON clients for remote logit and instruct services.
//!
//! Logits: `POST {base}/v1/logits {prefix_tokens, top_k}` returning
//! `{entries: [{token, surface, logprob}]}`.
//! Completions: `POST {base}/v1/complete {system, user, max_items, seed?}`
//! returning `{items: [string]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    finish_items, InstructBackend, InstructRequest, LmError, LogitBackend, LogitResult, Token,
    TokenId, Vocab,
};

pub const LOGIT_URL_ENV: &str = "PHRASELETTE_LOGIT_URL";
pub const INSTRUCT_URL_ENV: &str = "PHRASELETTE_INSTRUCT_URL";
pub const API_KEY_ENV: &str = "PHRASELETTE_API_KEY";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Pause before the single retry.
    pub retry_backoff: Duration,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            api_key: None,
            timeout: Duration::from_secs(30),
            retry_backoff: Duration::from_millis(250),
        }
    }

    /// Reads the URL from `url_var` and the key from the shared API key
    /// variable; `None` when the URL is unset.
    pub fn from_env(url_var: &str) -> Option<Self> {
        let url = std::env::var(url_var).ok().filter(|u| !u.trim().is_empty())?;
        let mut cfg = Self::new(url);
        cfg.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Some(cfg)
    }
}

struct Client {
    cfg: RemoteConfig,
    agent: ureq::Agent,
}

enum Failure {
    Retryable(String),
    Fatal(LmError),
}

impl Client {
    fn new(cfg: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { cfg, agent }
    }

    fn post_once(&self, path: &str, body: &Value) -> Result<Value, Failure> {
        let url = format!("{}{}", self.cfg.base_url, path);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Failure::Retryable(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(format!("{url}: reading body: {e}")))?;
        match status {
            200..=299 => {}
            413 => {
                return Err(Failure::Fatal(LmError::ContextTooLong {
                    len: body["prefix_tokens"].as_array().map_or(0, Vec::len),
                    max: 0,
                }))
            }
            408 | 429 | 500..=599 => return Err(Failure::Retryable(format!("{url}: HTTP {status}"))),
            _ => {
                return Err(Failure::Fatal(LmError::BackendUnavailable(format!(
                    "{url}: HTTP {status}"
                ))))
            }
        }
        if text.trim().is_empty() {
            return Err(Failure::Fatal(LmError::MalformedResponse("empty body".into())));
        }
        serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(LmError::MalformedResponse(format!("{e}"))))
    }

    /// Posts with one retry after the configured backoff.
    fn post(&self, path: &str, body: &Value) -> Result<Value, LmError> {
        match self.post_once(path, body) {
            Ok(v) => Ok(v),
            Err(Failure::Fatal(e)) => Err(e),
            Err(Failure::Retryable(first)) => {
                log::debug!("retrying after: {first}");
                std::thread::sleep(self.cfg.retry_backoff);
                match self.post_once(path, body) {
                    Ok(v) => Ok(v),
                    Err(Failure::Fatal(e)) => Err(e),
                    Err(Failure::Retryable(msg)) => Err(LmError::BackendUnavailable(msg)),
                }
            }
        }
    }
}

#[derive(Serialize)]
struct LogitsBody<'a> {
    prefix_tokens: &'a [TokenId],
    top_k: usize,
}

#[derive(Deserialize)]
struct LogitsReply {
    entries: Vec<LogitEntry>,
}

#[derive(Deserialize)]
struct LogitEntry {
    token: TokenId,
    surface: String,
    logprob: f64,
}

/// Remote logit tier. Tokenization uses a local copy of the server's
/// vocabulary so that prefixes can be sent as ids.
pub struct RemoteLogit {
    client: Client,
    vocab: Vocab,
    top_k: usize,
}

impl RemoteLogit {
    pub fn new(cfg: RemoteConfig, vocab: Vocab, top_k: usize) -> Self {
        Self {
            client: Client::new(cfg),
            vocab,
            top_k: top_k.max(1),
        }
    }
}

impl LogitBackend for RemoteLogit {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<LogitResult, LmError> {
        let body = serde_json::to_value(LogitsBody {
            prefix_tokens: prefix,
            top_k: self.top_k,
        })
        .expect("serialisable");
        let reply: LogitsReply = serde_json::from_value(self.client.post("/v1/logits", &body)?)
            .map_err(|e| LmError::MalformedResponse(e.to_string()))?;
        let mut distribution = Vec::with_capacity(reply.entries.len());
        for e in reply.entries {
            if !e.logprob.is_finite() || e.logprob > 0.0 {
                return Err(LmError::MalformedResponse(format!(
                    "log-probability {} for token {}",
                    e.logprob, e.token
                )));
            }
            distribution.push((Token { id: e.token, surface: e.surface }, e.logprob));
        }
        Ok(LogitResult {
            prefix: prefix.to_vec(),
            distribution,
        })
    }
}

#[derive(Serialize)]
struct CompleteBody<'a> {
    system: &'a str,
    user: &'a str,
    max_items: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct CompleteReply {
    items: Vec<String>,
}

pub struct RemoteInstruct {
    client: Client,
}

impl RemoteInstruct {
    pub fn new(cfg: RemoteConfig) -> Self {
        Self { client: Client::new(cfg) }
    }
}

impl InstructBackend for RemoteInstruct {
    fn complete(&self, req: &InstructRequest) -> Result<Vec<String>, LmError> {
        req.validate()?;
        let body = serde_json::to_value(CompleteBody {
            system: &req.system_text,
            user: &req.user_text,
            max_items: req.max_output_items,
            seed: req.seed,
        })
        .expect("serialisable");
        let reply: CompleteReply = serde_json::from_value(self.client.post("/v1/complete", &body)?)
            .map_err(|e| LmError::MalformedResponse(e.to_string()))?;
        finish_items(reply.items, req.max_output_items)
    }
}
