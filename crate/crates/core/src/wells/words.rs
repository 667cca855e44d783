use serde_json::Value;

use super::{ViewKind, Well, WellContext, WellDescriptor, WellError, WellOutput, WellRun, WellServices};
use crate::constraints::{Constraint, ConstraintSpec, IntRange};
use crate::matching::MatchMode;
use crate::model::{ConfigError, WellConfig, WellKind};
use crate::pos::{parse_tags, PosTag};

/// Emits POS-sequence, word-count and syllable-count constraints and
/// contributes the POS view. Generates nothing itself.
pub struct WordsWell;

fn pos_pattern(cfg: &WellConfig) -> Result<Option<Vec<PosTag>>, ConfigError> {
    let tags = match cfg.param("pos") {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::String(s)) => parse_tags(s).map_err(|e| cfg.bad("pos", e))?,
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| cfg.bad("pos", "expected tag names"))?
                    .parse::<PosTag>()
                    .map_err(|e| cfg.bad("pos", e))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(cfg.bad("pos", "expected a tag list")),
    };
    if tags.is_empty() {
        return Ok(None);
    }
    Ok(Some(tags))
}

fn range(cfg: &WellConfig, min_key: &str, max_key: &str) -> Result<Option<IntRange>, ConfigError> {
    let (min, max) = (cfg.param_usize(min_key)?, cfg.param_usize(max_key)?);
    let (min, max) = match (min, max) {
        (None, None) => return Ok(None),
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a),
        (None, Some(b)) => (1.min(b), b),
    };
    IntRange::new(min, max)
        .map(Some)
        .map_err(|e| cfg.bad(min_key, e.to_string()))
}

impl WordsWell {
    fn build(cfg: &WellConfig) -> Result<Vec<Constraint>, ConfigError> {
        let mut out = Vec::new();
        let id = |suffix: &str| format!("{}:{suffix}", cfg.well_id);
        if let Some(tags) = pos_pattern(cfg)? {
            let mode: MatchMode = cfg
                .param_str("pos_mode")?
                .unwrap_or("exact")
                .parse()
                .map_err(|e: String| cfg.bad("pos_mode", e))?;
            out.push(Constraint::new(id("pos"), cfg.well_id.clone(), ConstraintSpec::PosSequence { tags, mode })
                .map_err(|e| cfg.bad("pos", e.to_string()))?);
        }
        if let Some(r) = range(cfg, "words_min", "words_max")? {
            out.push(Constraint::new(id("words"), cfg.well_id.clone(), ConstraintSpec::WordCount(r))
                .map_err(|e| cfg.bad("words_min", e.to_string()))?);
        }
        if let Some(r) = range(cfg, "syllables_min", "syllables_max")? {
            out.push(
                Constraint::new(id("syllables"), cfg.well_id.clone(), ConstraintSpec::SyllableCount(r))
                    .map_err(|e| cfg.bad("syllables_min", e.to_string()))?,
            );
        }
        Ok(out)
    }
}

impl Well for WordsWell {
    fn descriptor(&self) -> WellDescriptor {
        WellDescriptor {
            constrains: true,
            views: true,
            ..WellDescriptor::new(WellKind::WORDS)
        }
        .param("pos", "tag sequence, e.g. \"VERB NOUN\"")
        .param("pos_mode", "exact | startsWith | endsWith | contains | inOrder (default exact)")
        .param("words_min", "minimum word count")
        .param("words_max", "maximum word count")
        .param("syllables_min", "minimum syllable count")
        .param("syllables_max", "maximum syllable count")
    }

    fn validate(&self, config: &WellConfig) -> Result<(), ConfigError> {
        config.validate()?;
        Self::build(config).map(|_| ())
    }

    fn constraints(
        &self,
        config: &WellConfig,
        _context: &WellContext,
        _services: &WellServices,
    ) -> Result<Vec<Constraint>, WellError> {
        Ok(Self::build(config)?)
    }

    fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError> {
        Ok(WellOutput {
            emitted_constraints: Self::build(run.config)?,
            view_contribution: Some(ViewKind::Pos),
            ..WellOutput::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn emits_configured_constraints() {
        let cfg = WellConfig::new("words", WellKind::WORDS)
            .with_param("pos", json!("VERB NOUN"))
            .with_param("pos_mode", json!("startsWith"))
            .with_param("words_min", json!(1))
            .with_param("words_max", json!(2));
        let cs = WordsWell::build(&cfg).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(
            cs[0].spec,
            ConstraintSpec::PosSequence {
                tags: vec![PosTag::Verb, PosTag::Noun],
                mode: MatchMode::StartsWith
            }
        );
        assert_eq!(cs[1].spec, ConstraintSpec::WordCount(IntRange { min: 1, max: 2 }));
        assert!(WordsWell::build(&WellConfig::new("w", WellKind::WORDS)).unwrap().is_empty());
    }

    #[test]
    fn inverted_range_rejected() {
        let cfg = WellConfig::new("words", WellKind::WORDS)
            .with_param("words_min", json!(4))
            .with_param("words_max", json!(1));
        assert!(WordsWell.validate(&cfg).is_err());
    }
}
