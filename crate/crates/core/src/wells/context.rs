use std::collections::HashSet;

use super::{Insight, ViewKind, Well, WellContext, WellDescriptor, WellError, WellOutput, WellRun, WellServices};
use crate::constraints::{Advice, Constraint, ConstraintSpec, LogProbBand, DEFAULT_TOKENS_PER_WORD};
use crate::lm::TokenId;
use crate::matching::MatchMode;
use crate::model::{ConfigError, Rephrasing, WellConfig, WellKind};
use crate::pos::parse_tags;
use crate::search::{beam_search, BeamParams, Histogram, PosPrefixPrune, SearchError, DEFAULT_BIN_COUNT};
use crate::views::{attach_log_probs, split_context};

/// Likely continuations of the text before the inlet, found by beam search
/// on the logit backend. The selection itself is never sent to the model.
pub struct ContextWell;

fn configured_band(cfg: &WellConfig) -> Result<Option<LogProbBand>, ConfigError> {
    let (min, max) = (cfg.param_f64("band_min")?, cfg.param_f64("band_max")?);
    if min.is_none() && max.is_none() {
        return Ok(None);
    }
    LogProbBand::new(min.unwrap_or(f64::NEG_INFINITY), max.unwrap_or(0.0))
        .map(Some)
        .map_err(|e| cfg.bad("band_min", e.to_string()))
}

fn advised_band(advice: &Advice) -> Option<LogProbBand> {
    let min = advice.search_params.get("bandMin");
    let max = advice.search_params.get("bandMax");
    if min.is_none() && max.is_none() {
        return None;
    }
    let min = min.and_then(|v| v.as_f64()).unwrap_or(f64::NEG_INFINITY);
    let max = max.and_then(|v| v.as_f64()).unwrap_or(0.0);
    LogProbBand::new(min, max).ok()
}

fn intersect(a: Option<LogProbBand>, b: Option<LogProbBand>) -> Result<Option<LogProbBand>, SearchError> {
    match (a, b) {
        (None, x) | (x, None) => Ok(x),
        (Some(a), Some(b)) => LogProbBand::new(a.min.max(b.min), a.max.min(b.max))
            .map(Some)
            .map_err(|_| SearchError::NoHypotheses),
    }
}

impl ContextWell {
    fn params(run: &WellRun<'_>) -> Result<BeamParams, WellError> {
        let cfg = run.config;
        let advice = run.advice;
        let mut p = BeamParams::default();
        if let Some(v) = cfg.param_usize("beam_width")? {
            p.beam_width = v;
        }
        if let Some(v) = cfg.param_usize("max_tokens")? {
            p.max_tokens = v;
        }
        if let Some(v) = cfg.param_usize("result_cap")? {
            p.result_cap = v;
        }
        if let Some(v) = cfg.param_bool("length_normalize")? {
            p.length_normalize = v;
        }
        if let Some(min) = advice.param_usize("minWords") {
            p.min_words = min.max(1);
        }
        if let Some(max) = advice.param_usize("maxWords") {
            p.max_words = Some(max.max(p.min_words));
            let per_word = cfg.param_usize("tokens_per_word")?.unwrap_or(DEFAULT_TOKENS_PER_WORD);
            p.max_tokens = max.max(1) * per_word.max(1);
        }
        p.band = intersect(configured_band(cfg)?, advised_band(advice))?;
        if cfg.param_bool("pos_prune")?.unwrap_or(false) {
            if let Some(pattern) = advice.param_str("posPattern") {
                let tags = parse_tags(pattern).map_err(|e| cfg.bad("pos_prune", e))?;
                let mode: MatchMode = advice
                    .param_str("mode")
                    .unwrap_or("exact")
                    .parse()
                    .map_err(|e: String| cfg.bad("pos_prune", e))?;
                p.pos_prune = Some(PosPrefixPrune {
                    tags,
                    mode,
                    tagger: run.services.tagger.clone(),
                });
            }
        }
        p.validate()?;
        Ok(p)
    }

    fn build(cfg: &WellConfig) -> Result<Vec<Constraint>, WellError> {
        Ok(match configured_band(cfg)? {
            Some(band) => vec![Constraint::new(
                format!("{}:band", cfg.well_id),
                cfg.well_id.clone(),
                ConstraintSpec::LogProbBand(band),
            )?],
            None => Vec::new(),
        })
    }
}

impl Well for ContextWell {
    fn descriptor(&self) -> WellDescriptor {
        WellDescriptor {
            generates: true,
            constrains: true,
            insights: true,
            views: true,
            ..WellDescriptor::new(WellKind::CONTEXT)
        }
        .param("beam_width", "hypotheses kept per step (default 64)")
        .param("max_tokens", "token budget per rephrasing (default 8)")
        .param("result_cap", "rephrasings surfaced (default 50)")
        .param("band_min", "lowest phrase log-probability kept")
        .param("band_max", "highest phrase log-probability kept")
        .param("length_normalize", "rank by per-token log-probability (default false)")
        .param("tokens_per_word", "token budget per advised word (default 2)")
        .param("bins", "histogram bins (default 20)")
        .param("pos_prune", "experimental: prune by advised POS prefix (default false)")
    }

    fn validate(&self, config: &WellConfig) -> Result<(), ConfigError> {
        config.validate()?;
        for key in ["beam_width", "max_tokens", "result_cap", "bins", "tokens_per_word"] {
            if config.param_usize(key)? == Some(0) {
                return Err(config.bad(key, "must be at least 1"));
            }
        }
        config.param_bool("length_normalize")?;
        config.param_bool("pos_prune")?;
        configured_band(config)?;
        Ok(())
    }

    fn constraints(
        &self,
        config: &WellConfig,
        _context: &WellContext,
        _services: &WellServices,
    ) -> Result<Vec<Constraint>, WellError> {
        Self::build(config)
    }

    fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError> {
        self.validate(run.config)?;
        let backend = run.services.logit()?;
        let params = Self::params(run)?;
        let context: Vec<TokenId> = backend
            .tokenize(split_context(&run.context.slice.before).0)?
            .iter()
            .map(|t| t.id)
            .collect();
        let mut out = WellOutput {
            emitted_constraints: Self::build(run.config)?,
            view_contribution: Some(ViewKind::LogProb),
            ..WellOutput::default()
        };
        let report = match beam_search(backend, &context, &params, run.services.exec) {
            Ok(r) => r,
            Err(SearchError::NoHypotheses) => return Ok(out),
            Err(e) => return Err(e.into()),
        };
        let bins = run.config.param_usize("bins")?.unwrap_or(DEFAULT_BIN_COUNT);
        if let Ok(h) = Histogram::of(&report.explored, bins) {
            out.insights.push(Insight::Histogram(h));
        }
        let mut seen = HashSet::new();
        for h in &report.ranked {
            let Some(mut r) = Rephrasing::new(
                run.config.well_id.clone(),
                &h.text(),
                run.context.generation,
                h.log_prob,
            ) else {
                continue;
            };
            if !seen.insert(r.text.clone()) {
                continue;
            }
            let pieces: Vec<(String, f64)> = h
                .tokens
                .iter()
                .map(|t| t.surface.clone())
                .zip(h.step_log_probs.iter().copied())
                .collect();
            attach_log_probs(&mut r, &pieces);
            out.rephrasings.push(r);
        }
        Ok(out)
    }
}
