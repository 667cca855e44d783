//! Constrained beam search over a logit backend, plus the log-likelihood
//! histogram and probability-band filtering used by the context well.

mod histogram;

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use histogram::{Histogram, DEFAULT_BIN_COUNT};

use crate::constraints::LogProbBand;
use crate::exec::Execution;
use crate::lm::{LmError, LogitBackend, Token, TokenId};
use crate::matching::MatchMode;
use crate::pos::{PosTag, Tagger};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Backend(#[from] LmError),
    #[error("no hypotheses survive the search constraints")]
    NoHypotheses,
    #[error("histogram of an empty set")]
    EmptyInput,
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
}

/// Experimental pruning of hypotheses whose completed words cannot start
/// the requested tag sequence. Only `exact` and `startsWith` patterns prune.
#[derive(Clone)]
pub struct PosPrefixPrune {
    pub tags: Vec<PosTag>,
    pub mode: MatchMode,
    pub tagger: Arc<dyn Tagger>,
}

impl std::fmt::Debug for PosPrefixPrune {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PosPrefixPrune")
            .field("tags", &self.tags)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl PosPrefixPrune {
    fn keeps(&self, text: &str) -> bool {
        if !matches!(self.mode, MatchMode::Exact | MatchMode::StartsWith) {
            return true;
        }
        let words: Vec<&str> = text.split_whitespace().collect();
        // the last word may still grow unless followed by whitespace
        let complete = if text.ends_with(char::is_whitespace) {
            words.len()
        } else {
            words.len().saturating_sub(1)
        };
        if complete == 0 {
            return true;
        }
        if self.mode == MatchMode::Exact && complete > self.tags.len() {
            return false;
        }
        let tags = self.tagger.tag_words(&words);
        tags.iter()
            .take(complete)
            .zip(&self.tags)
            .all(|(have, want)| have == want)
    }
}

#[derive(Clone, Debug)]
pub struct BeamParams {
    pub beam_width: usize,
    pub max_tokens: usize,
    pub result_cap: usize,
    pub band: Option<LogProbBand>,
    pub length_normalize: bool,
    /// Candidates need at least this many words.
    pub min_words: usize,
    /// Expansions that would start a word beyond this are pruned.
    pub max_words: Option<usize>,
    pub pos_prune: Option<PosPrefixPrune>,
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            beam_width: 64,
            max_tokens: 8,
            result_cap: 50,
            band: None,
            length_normalize: false,
            min_words: 1,
            max_words: None,
            pos_prune: None,
        }
    }
}

impl BeamParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidParams(m.to_owned()));
        if self.beam_width == 0 {
            return bad("beam width must be at least 1");
        }
        if self.max_tokens == 0 {
            return bad("max tokens must be at least 1");
        }
        if self.result_cap == 0 {
            return bad("result cap must be at least 1");
        }
        if let Some(max) = self.max_words {
            if max < self.min_words {
                return bad("max words is below min words");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Hypothesis {
    pub tokens: Vec<Token>,
    /// Log-probability of each token given everything before it.
    pub step_log_probs: Vec<f64>,
    pub log_prob: f64,
    pub finished: bool,
}

impl Hypothesis {
    fn root() -> Self {
        Self {
            tokens: Vec::new(),
            step_log_probs: Vec::new(),
            log_prob: 0.0,
            finished: false,
        }
    }

    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn ids(&self) -> Vec<TokenId> {
        self.tokens.iter().map(|t| t.id).collect()
    }

    pub fn word_count(&self) -> usize {
        self.text().split_whitespace().count()
    }

    /// Ranking score: total log-probability, or per-token mean when
    /// length-normalised.
    pub fn score(&self, length_normalize: bool) -> f64 {
        if length_normalize && !self.tokens.is_empty() {
            self.log_prob / self.tokens.len() as f64
        } else {
            self.log_prob
        }
    }
}

/// Score descending, then token-id sequence ascending.
pub fn rank_order(a: &Hypothesis, b: &Hypothesis, length_normalize: bool) -> Ordering {
    b.score(length_normalize)
        .total_cmp(&a.score(length_normalize))
        .then_with(|| a.tokens.iter().map(|t| t.id).cmp(b.tokens.iter().map(|t| t.id)))
}

/// Search output: every scored candidate (for the histogram, before any
/// band filtering) and the ranked, band-filtered, capped result list.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub explored: Vec<f64>,
    pub ranked: Vec<Hypothesis>,
}

/// Beam search continuing `context`. Every expansion that satisfies the
/// word bounds and the band becomes a candidate, whether or not it stays in
/// the beam; the beam keeps the `beam_width` best by [`rank_order`].
/// Expansions below the band minimum are pruned (scores only fall as
/// tokens are added), as are expansions past `max_words`.
pub fn beam_search(
    backend: &dyn LogitBackend,
    context: &[TokenId],
    params: &BeamParams,
    exec: Execution,
) -> Result<SearchReport, SearchError> {
    params.validate()?;
    let norm = params.length_normalize;
    let mut beam = vec![Hypothesis::root()];
    let mut candidates: Vec<Hypothesis> = Vec::new();
    let mut explored: Vec<f64> = Vec::new();

    for _ in 0..params.max_tokens {
        if beam.is_empty() {
            break;
        }
        let expansions = exec.map(&beam, |h| -> Result<Expansion, LmError> {
            let mut prefix = context.to_vec();
            prefix.extend(h.tokens.iter().map(|t| t.id));
            let dist = backend.next_distribution(&prefix)?;
            let mut out = Expansion::default();
            for (tok, lp) in dist.distribution {
                if !lp.is_finite() {
                    continue;
                }
                let mut child = h.clone();
                child.tokens.push(tok);
                child.step_log_probs.push(lp);
                child.log_prob += lp;
                let words = child.word_count();
                if params.max_words.is_some_and(|m| words > m) {
                    continue;
                }
                out.explored.push(child.log_prob);
                if params.band.is_some_and(|b| child.log_prob < b.min) {
                    continue;
                }
                if let Some(prune) = &params.pos_prune {
                    if !prune.keeps(&child.text()) {
                        continue;
                    }
                }
                child.finished = child.tokens.len() == params.max_tokens;
                if words >= params.min_words.max(1)
                    && params.band.is_none_or(|b| child.log_prob <= b.max)
                {
                    out.candidates.push(child.clone());
                }
                if !child.finished {
                    out.next.push(child);
                }
            }
            Ok(out)
        });
        let mut next: Vec<Hypothesis> = Vec::new();
        for e in expansions {
            let e = e?;
            explored.extend(e.explored);
            candidates.extend(e.candidates);
            next.extend(e.next);
        }
        next.sort_by(|a, b| rank_order(a, b, norm));
        next.truncate(params.beam_width);
        beam = next;
    }

    candidates.sort_by(|a, b| rank_order(a, b, norm));
    candidates.truncate(params.result_cap);
    if candidates.is_empty() {
        return Err(SearchError::NoHypotheses);
    }
    Ok(SearchReport {
        explored,
        ranked: candidates,
    })
}

/// Children of one beam entry that survive pruning, in distribution order.
#[derive(Default)]
struct Expansion {
    explored: Vec<f64>,
    candidates: Vec<Hypothesis>,
    next: Vec<Hypothesis>,
}

/// Keeps hypotheses inside `band`, preserving order.
pub fn apply_band(hyps: &[Hypothesis], band: &LogProbBand) -> Vec<Hypothesis> {
    hyps.iter().filter(|h| band.contains(h.log_prob)).cloned().collect()
}
