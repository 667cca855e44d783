//! Language-model access in two capability tiers: the logit tier (next-token
//! distributions, used by context search and log-probability views) and the
//! instruct tier (prompted list completions, used by the prompt wells).

mod capture;
mod mock;
mod remote;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use capture::{RecordingInstruct, RecordingLogit};
pub use mock::{InstructRule, MockInstruct, MockInstructFixture, MockLogit, MockLogitFixture};
pub use remote::{RemoteConfig, RemoteInstruct, RemoteLogit, API_KEY_ENV, INSTRUCT_URL_ENV, LOGIT_URL_ENV};
pub use vocab::{detokenize, Token, TokenId, Vocab};

/// Log-probability assigned to a token that the backend did not return for
/// a step (out-of-vocabulary pieces, or tokens outside a remote top-k).
pub const FLOOR_LOG_PROB: f64 = -23.025850929940457; // ln(1e-10)

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LmError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("context of {len} tokens exceeds the backend limit of {max}")]
    ContextTooLong { len: usize, max: usize },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("token id {0} is not in the vocabulary")]
    InvalidToken(TokenId),
    #[error("bad fixture: {0}")]
    Fixture(String),
}

/// Next-token distribution after `prefix`, most likely first.
#[derive(Clone, Debug, PartialEq)]
pub struct LogitResult {
    pub prefix: Vec<TokenId>,
    pub distribution: Vec<(Token, f64)>,
}

impl LogitResult {
    pub fn log_prob(&self, id: TokenId) -> Option<f64> {
        self.distribution
            .iter()
            .find(|(t, _)| t.id == id)
            .map(|(_, lp)| *lp)
    }

    /// Sorts by log-prob descending, then by token id.
    pub(crate) fn sorted(prefix: Vec<TokenId>, mut distribution: Vec<(Token, f64)>) -> Self {
        distribution.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.id.cmp(&b.0.id)));
        Self { prefix, distribution }
    }
}

/// Token-distribution access.
pub trait LogitBackend: Send + Sync {
    fn vocab(&self) -> &Vocab;

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<LogitResult, LmError>;

    fn tokenize(&self, text: &str) -> Result<Vec<Token>, LmError> {
        Ok(self.vocab().tokenize(text))
    }

    /// Per-token log-probabilities of `tokens` following `context`.
    fn token_log_probs(&self, context: &[TokenId], tokens: &[TokenId]) -> Result<Vec<f64>, LmError> {
        let mut prefix = context.to_vec();
        let mut out = Vec::with_capacity(tokens.len());
        for &t in tokens {
            let dist = self.next_distribution(&prefix)?;
            out.push(dist.log_prob(t).unwrap_or(FLOOR_LOG_PROB));
            prefix.push(t);
        }
        Ok(out)
    }

    /// Total log-probability of `tokens` following `context`.
    fn score_sequence(&self, context: &[TokenId], tokens: &[TokenId]) -> Result<f64, LmError> {
        if tokens.is_empty() {
            return Err(LmError::InvalidRequest("cannot score an empty sequence".into()));
        }
        Ok(self.token_log_probs(context, tokens)?.iter().sum())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstructRequest {
    pub system_text: String,
    pub user_text: String,
    pub max_output_items: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InstructRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>, max_items: usize) -> Self {
        Self {
            system_text: system.into(),
            user_text: user.into(),
            max_output_items: max_items,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LmError> {
        if self.user_text.trim().is_empty() {
            return Err(LmError::InvalidRequest("user text is empty".into()));
        }
        if self.max_output_items == 0 {
            return Err(LmError::InvalidRequest("max_output_items must be at least 1".into()));
        }
        Ok(())
    }

    /// Both prompt parts, for capture assertions.
    pub fn full_text(&self) -> String {
        format!("{}\n{}", self.system_text, self.user_text)
    }
}

/// Prompted list completion.
pub trait InstructBackend: Send + Sync {
    /// Returns between 1 and `max_output_items` non-empty items.
    fn complete(&self, req: &InstructRequest) -> Result<Vec<String>, LmError>;
}

/// Splits raw completion text into list items: lines are trimmed, blank
/// lines dropped, list markers and surrounding quotes removed.
pub fn parse_items(raw: &str) -> Vec<String> {
    raw.lines().filter_map(clean_item).collect()
}

fn clean_item(line: &str) -> Option<String> {
    let mut s = line.trim();
    for marker in ["- ", "* ", "• "] {
        if let Some(rest) = s.strip_prefix(marker) {
            s = rest.trim_start();
        }
    }
    let digits = s.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &s[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            s = r.trim_start();
        }
    }
    const QUOTES: [(char, char); 4] = [('"', '"'), ('\'', '\''), ('“', '”'), ('‘', '’')];
    for (open, close) in QUOTES {
        if s.chars().count() >= 2 && s.starts_with(open) && s.ends_with(close) {
            s = &s[open.len_utf8()..s.len() - close.len_utf8()];
            s = s.trim();
            break;
        }
    }
    (!s.is_empty()).then(|| s.to_owned())
}

/// Normalises backend items: splits multi-line items, cleans them, and caps
/// the count. An empty result is a malformed response.
pub(crate) fn finish_items(raw: Vec<String>, max: usize) -> Result<Vec<String>, LmError> {
    let mut items: Vec<String> = raw.iter().flat_map(|r| parse_items(r)).collect();
    items.truncate(max);
    if items.is_empty() {
        return Err(LmError::MalformedResponse("no items in completion".into()));
    }
    Ok(items)
}
