//! Headless runs: parsing of `--inlet`, `--well`, `--constraint` and
//! `--set` arguments, the run itself, and JSON or table output.
//!
//! Constraints are emitted by wells, so constraint arguments become
//! parameters of a words, sound or context well (created when absent).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use phraselette_core::constraints::Constraint;
use phraselette_core::matching::MatchMode;
use phraselette_core::model::{CharRange, Document, Rephrasing, WellConfig, WellId, WellKind};
use phraselette_core::orchestrator::{Orchestrator, OrchestratorError, RunTarget, WellStatus};
use phraselette_core::phonology::{parse_phonemes, SoundMode};
use phraselette_core::pos::parse_tags;
use phraselette_core::wells::{Insight, ViewKind, WellRegistry, WellServices};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::backend::SetupError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error("{0}")]
    Backend(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Setup(_) => EXIT_USAGE,
            CliError::Backend(_) => EXIT_BACKEND,
            CliError::Io(_) => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `START:END` in characters, half-open, non-empty.
pub fn parse_inlet(s: &str) -> Result<CharRange, CliError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("inlet {s:?}: expected START:END")))?;
    let num = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("inlet {s:?}: {x:?} is not a character offset")))
    };
    let (start, end) = (num(a)?, num(b)?);
    if start >= end {
        return Err(usage(format!("inlet {s:?}: start must be before end")));
    }
    Ok(CharRange::new(start, end))
}

/// `KIND` or `KIND:DESCRIPTION`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WellArg {
    pub kind: String,
    pub description: Option<String>,
}

impl FromStr for WellArg {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (kind, desc) = match s.split_once(':') {
            Some((k, d)) => (k, Some(d.trim().to_owned()).filter(|d| !d.is_empty())),
            None => (s, None),
        };
        let kind = kind.trim();
        if kind.is_empty() {
            return Err(usage(format!("well {s:?}: missing kind")));
        }
        Ok(Self {
            kind: kind.to_owned(),
            description: desc,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintArg {
    Words { min: usize, max: usize },
    Syllables { min: usize, max: usize },
    Pos { tags: String, mode: MatchMode },
    /// No phonemes means the selection's pronunciation.
    Sound { phonemes: Option<String>, mode: SoundMode },
    Band { min: Option<f64>, max: Option<f64> },
}

fn parse_count(spec: &str, body: &str) -> Result<(usize, usize), CliError> {
    let num = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("constraint {spec:?}: {x:?} is not a count")))
    };
    let (min, max) = match body.split_once('-') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let n = num(body)?;
            (n, n)
        }
    };
    if min == 0 || min > max {
        return Err(usage(format!("constraint {spec:?}: need 1 <= MIN <= MAX")));
    }
    Ok((min, max))
}

impl FromStr for ConstraintArg {
    type Err = CliError;

    /// `words:MIN-MAX`, `syllables:MIN-MAX`, `pos:TAGS[:MODE]`,
    /// `sound:[PHONEMES][:MODE]`, `band:[MIN]:[MAX]`.
    fn from_str(spec: &str) -> Result<Self, CliError> {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| usage(format!("constraint {spec:?}: expected KIND:VALUE")))?;
        match kind.trim() {
            "words" => parse_count(spec, body).map(|(min, max)| ConstraintArg::Words { min, max }),
            "syllables" => parse_count(spec, body).map(|(min, max)| ConstraintArg::Syllables { min, max }),
            "pos" => {
                let (tags, mode) = match body.rsplit_once(':') {
                    Some((t, m)) => (t, m.parse().map_err(|e: String| usage(format!("constraint {spec:?}: {e}")))?),
                    None => (body, MatchMode::Exact),
                };
                let parsed = parse_tags(tags).map_err(|e| usage(format!("constraint {spec:?}: {e}")))?;
                if parsed.is_empty() {
                    return Err(usage(format!("constraint {spec:?}: no tags")));
                }
                Ok(ConstraintArg::Pos {
                    tags: tags.trim().to_owned(),
                    mode,
                })
            }
            "sound" => {
                let (phon, mode) = match body.rsplit_once(':') {
                    Some((p, m)) => (p, Some(m)),
                    None => match body.parse::<SoundMode>() {
                        Ok(_) => ("", Some(body)),
                        Err(_) => (body, None),
                    },
                };
                let mode = match mode {
                    Some(m) => m.parse().map_err(|e: String| usage(format!("constraint {spec:?}: {e}")))?,
                    None => SoundMode::RhymesWith,
                };
                let phonemes = Some(phon.trim().to_owned()).filter(|p| !p.is_empty());
                if let Some(p) = &phonemes {
                    parse_phonemes(p).map_err(|e| usage(format!("constraint {spec:?}: {e}")))?;
                }
                Ok(ConstraintArg::Sound { phonemes, mode })
            }
            "band" => {
                let (a, b) = body
                    .split_once(':')
                    .ok_or_else(|| usage(format!("constraint {spec:?}: expected band:MIN:MAX")))?;
                let num = |x: &str| -> Result<Option<f64>, CliError> {
                    let x = x.trim();
                    if x.is_empty() {
                        return Ok(None);
                    }
                    x.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(Some)
                        .ok_or_else(|| usage(format!("constraint {spec:?}: {x:?} is not a log-probability")))
                };
                let (min, max) = (num(a)?, num(b)?);
                if min.is_none() && max.is_none() {
                    return Err(usage(format!("constraint {spec:?}: give MIN, MAX or both")));
                }
                Ok(ConstraintArg::Band { min, max })
            }
            other => Err(usage(format!(
                "constraint {spec:?}: unknown kind {other:?} (words, syllables, pos, sound, band)"
            ))),
        }
    }
}

/// `WELL_ID.PARAM=VALUE`, the value read as JSON when it parses, else as a
/// string.
#[derive(Clone, Debug, PartialEq)]
pub struct SetArg {
    pub well_id: String,
    pub key: String,
    pub value: Value,
}

impl FromStr for SetArg {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (lhs, value) = s
            .split_once('=')
            .ok_or_else(|| usage(format!("--set {s:?}: expected WELL.PARAM=VALUE")))?;
        let (well_id, key) = lhs
            .rsplit_once('.')
            .ok_or_else(|| usage(format!("--set {s:?}: expected WELL.PARAM=VALUE")))?;
        Ok(Self {
            well_id: well_id.trim().to_owned(),
            key: key.trim().to_owned(),
            value: serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_owned())),
        })
    }
}

/// Well configs for a run. Well ids are the kind, suffixed `-2`, `-3`...
/// for repeats.
pub fn build_configs(
    wells: &[WellArg],
    constraints: &[ConstraintArg],
    sets: &[SetArg],
    registry: &WellRegistry,
) -> Result<Vec<WellConfig>, CliError> {
    let mut configs: Vec<WellConfig> = Vec::new();
    let add = |configs: &mut Vec<WellConfig>, kind: &str| -> usize {
        let n = configs.iter().filter(|c| c.kind.is(kind)).count();
        let id = if n == 0 { kind.to_owned() } else { format!("{kind}-{}", n + 1) };
        configs.push(WellConfig::new(id, kind));
        configs.len() - 1
    };
    for w in wells {
        let i = add(&mut configs, &w.kind);
        configs[i].prompt_description = w.description.clone();
    }
    let mut seen = BTreeSet::new();
    for c in constraints {
        let (kind, params): (&str, Vec<(&str, Value)>) = match c {
            ConstraintArg::Words { min, max } => (WellKind::WORDS, vec![("words_min", json!(min)), ("words_max", json!(max))]),
            ConstraintArg::Syllables { min, max } => (
                WellKind::WORDS,
                vec![("syllables_min", json!(min)), ("syllables_max", json!(max))],
            ),
            ConstraintArg::Pos { tags, mode } => (WellKind::WORDS, vec![("pos", json!(tags)), ("pos_mode", json!(mode))]),
            ConstraintArg::Sound { phonemes, mode } => {
                let mut p = vec![("mode", json!(mode))];
                if let Some(ph) = phonemes {
                    p.push(("phonemes", json!(ph)));
                }
                (WellKind::SOUND, p)
            }
            ConstraintArg::Band { min, max } => {
                let mut p = Vec::new();
                if let Some(v) = min {
                    p.push(("band_min", json!(v)));
                }
                if let Some(v) = max {
                    p.push(("band_max", json!(v)));
                }
                (WellKind::CONTEXT, p)
            }
        };
        let label = std::mem::discriminant(c);
        if !seen.insert(format!("{label:?}")) {
            return Err(usage(format!("constraint {c:?} given twice")));
        }
        let i = match configs.iter().position(|w| w.kind.is(kind)) {
            Some(i) => i,
            None => add(&mut configs, kind),
        };
        for (k, v) in params {
            configs[i].parameters.insert(k.to_owned(), v);
        }
    }
    for s in sets {
        let cfg = configs
            .iter_mut()
            .find(|c| c.well_id.as_str() == s.well_id)
            .ok_or_else(|| usage(format!("--set: no well with id {:?}", s.well_id)))?;
        cfg.parameters.insert(s.key.clone(), s.value.clone());
    }
    if configs.is_empty() {
        return Err(usage("no wells: give at least one --well or --constraint"));
    }
    for c in &configs {
        registry.validate(c).map_err(|e| usage(e.to_string()))?;
    }
    Ok(configs)
}

pub struct RunSpec {
    pub text: String,
    pub inlet: CharRange,
    pub configs: Vec<WellConfig>,
    pub seed: Option<u64>,
    pub timeout: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InletOut {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Everything a run produced, minus arrival order (which depends on
/// thread scheduling).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunOutput {
    pub inlet: InletOut,
    pub generation: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub wells: BTreeMap<WellId, WellStatus>,
    pub constraints: Vec<Constraint>,
    pub views: BTreeSet<ViewKind>,
    pub insights: BTreeMap<WellId, Vec<Insight>>,
    pub rephrasings: Vec<Rephrasing>,
}

impl RunOutput {
    /// Wells that failed because a language-model backend did.
    pub fn backend_failures(&self) -> Vec<(&WellId, &str)> {
        self.wells
            .iter()
            .filter_map(|(id, s)| match s {
                WellStatus::Failed { reason, backend: true } => Some((id, reason.as_str())),
                _ => None,
            })
            .collect()
    }
}

pub fn run(spec: &RunSpec, services: WellServices) -> Result<RunOutput, CliError> {
    let mut doc = Document::new("cli", spec.text.clone());
    let inlet = doc
        .create_inlet(spec.inlet)
        .map_err(|e| usage(format!("inlet: {e}")))?
        .id
        .clone();
    let orch = Orchestrator::new(Arc::new(WellRegistry::builtin()), services);
    let job = orch
        .run_wells(&mut doc, &inlet, &spec.configs, RunTarget::All, spec.seed)
        .map_err(|e| match e {
            OrchestratorError::Constraint { ref source, .. } if source.is_backend() => CliError::Backend(e.to_string()),
            other => usage(other.to_string()),
        })?;
    let snap = orch.wait(&job, spec.timeout).map_err(|e| CliError::Io(e.to_string()))?;
    if !snap.complete {
        return Err(CliError::Backend(format!("wells still running after {:?}", spec.timeout)));
    }
    let range = doc.inlet(&inlet).map_err(|e| CliError::Io(e.to_string()))?.range;
    let slice = doc.slice_context(&inlet).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(RunOutput {
        inlet: InletOut {
            start: range.start,
            end: range.end,
            text: slice.selection,
        },
        generation: snap.generation,
        seed: spec.seed,
        wells: snap.wells,
        constraints: snap.constraints,
        views: snap.views,
        insights: snap.insights,
        rephrasings: snap.rephrasings,
    })
}

pub fn render_json(out: &RunOutput) -> String {
    let mut s = serde_json::to_string_pretty(out).expect("output serializes");
    s.push('\n');
    s
}

fn status_text(s: &WellStatus) -> String {
    match s {
        WellStatus::Pending => "pending".into(),
        WellStatus::Done => "done".into(),
        WellStatus::Stale => "stale".into(),
        WellStatus::Failed { reason, .. } => format!("failed: {reason}"),
    }
}

pub fn render_table(out: &RunOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "inlet {}:{} {:?}", out.inlet.start, out.inlet.end, out.inlet.text);
    for (id, st) in &out.wells {
        let _ = writeln!(s, "well {id}: {}", status_text(st));
    }
    for c in &out.constraints {
        let _ = writeln!(s, "constraint {}: {}", c.id, serde_json::to_string(c).expect("constraint serializes"));
    }
    for (id, items) in &out.insights {
        for insight in items {
            match insight {
                Insight::TextBullets(b) => {
                    for line in b {
                        let _ = writeln!(s, "{id}: - {line}");
                    }
                }
                Insight::Definition(d) => {
                    let _ = writeln!(s, "{id}: {d}");
                }
                Insight::PronunciationAnnotation { text, rendering, .. } => {
                    let _ = writeln!(s, "{id}: {text} /{rendering}/");
                }
                Insight::Histogram(h) => {
                    let _ = writeln!(s, "{id}: histogram {}", serde_json::to_string(h).expect("histogram serializes"));
                }
            }
        }
    }
    let wide = out.rephrasings.iter().map(|r| r.well_id.as_str().len()).max().unwrap_or(4).max(4);
    let _ = writeln!(s, "{:>3}  {:>5}  {:<7}  {:<wide$}  {:>8}  text", "#", "score", "match", "well", "logprob");
    for (i, r) in out.rephrasings.iter().enumerate() {
        let lp = r.total_log_prob.map_or_else(|| "-".to_owned(), |v| format!("{v:.3}"));
        let _ = writeln!(
            s,
            "{:>3}  {:>5.3}  {:<7}  {:<wide$}  {:>8}  {}",
            i + 1,
            r.overall_score,
            if r.fully_matched { "full" } else { "partial" },
            r.well_id.as_str(),
            lp,
            r.text,
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inlet_ranges() {
        assert_eq!(parse_inlet("10:21").unwrap(), CharRange::new(10, 21));
        for bad in ["21:10", "5:5", "a:3", "7", ":"] {
            assert_eq!(parse_inlet(bad).unwrap_err().exit_code(), EXIT_USAGE, "{bad}");
        }
    }

    #[test]
    fn constraint_specs() {
        assert_eq!("words:1-4".parse::<ConstraintArg>().unwrap(), ConstraintArg::Words { min: 1, max: 4 });
        assert_eq!("words:3".parse::<ConstraintArg>().unwrap(), ConstraintArg::Words { min: 3, max: 3 });
        assert_eq!(
            "pos:VERB ADV:exact".parse::<ConstraintArg>().unwrap(),
            ConstraintArg::Pos {
                tags: "VERB ADV".into(),
                mode: MatchMode::Exact
            }
        );
        assert_eq!(
            "pos:NOUN".parse::<ConstraintArg>().unwrap(),
            ConstraintArg::Pos {
                tags: "NOUN".into(),
                mode: MatchMode::Exact
            }
        );
        assert_eq!(
            "sound:K AE P:startsWith".parse::<ConstraintArg>().unwrap(),
            ConstraintArg::Sound {
                phonemes: Some("K AE P".into()),
                mode: SoundMode::StartsWith
            }
        );
        assert_eq!(
            "sound:rhymesWith".parse::<ConstraintArg>().unwrap(),
            ConstraintArg::Sound {
                phonemes: None,
                mode: SoundMode::RhymesWith
            }
        );
        assert_eq!(
            "band:-12:-4".parse::<ConstraintArg>().unwrap(),
            ConstraintArg::Band {
                min: Some(-12.0),
                max: Some(-4.0)
            }
        );
        assert_eq!(
            "band::-4".parse::<ConstraintArg>().unwrap(),
            ConstraintArg::Band { min: None, max: Some(-4.0) }
        );
        for bad in ["words:4-1", "words:0-2", "pos:FOO", "pos:VERB:sideways", "sound:QQ", "band::", "tone:x", "words"] {
            assert!(bad.parse::<ConstraintArg>().is_err(), "{bad}");
        }
    }

    #[test]
    fn constraints_become_well_parameters() {
        let registry = WellRegistry::builtin();
        let wells = ["thesaurus:a romance novel's lexicon".parse::<WellArg>().unwrap(), "context".parse().unwrap()];
        let constraints: Vec<ConstraintArg> = ["words:1-4", "pos:VERB ADV:exact", "band::-4"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let sets = ["context.beam_width=32".parse::<SetArg>().unwrap()];
        let configs = build_configs(&wells, &constraints, &sets, &registry).unwrap();
        let ids: Vec<&str> = configs.iter().map(|c| c.well_id.as_str()).collect();
        assert_eq!(ids, ["thesaurus", "context", "words"]);
        assert_eq!(configs[0].description(), Some("a romance novel's lexicon"));
        assert_eq!(configs[1].parameters["band_max"], json!(-4.0));
        assert_eq!(configs[1].parameters["beam_width"], json!(32));
        assert_eq!(configs[2].parameters["pos"], json!("VERB ADV"));
        assert_eq!(configs[2].parameters["pos_mode"], json!("exact"));
        assert_eq!(configs[2].parameters["words_max"], json!(4));
    }

    #[test]
    fn repeated_kinds_get_suffixed_ids() {
        let registry = WellRegistry::builtin();
        let wells: Vec<WellArg> = ["thesaurus:a", "thesaurus:b"].iter().map(|s| s.parse().unwrap()).collect();
        let configs = build_configs(&wells, &[], &[], &registry).unwrap();
        assert_eq!(configs[1].well_id.as_str(), "thesaurus-2");
        let twice: Vec<ConstraintArg> = ["words:1-2", "words:3-4"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(build_configs(&[], &twice, &[], &registry).is_err());
        let unknown = ["oracle:x".parse::<WellArg>().unwrap()];
        assert_eq!(build_configs(&unknown, &[], &[], &registry).unwrap_err().exit_code(), EXIT_USAGE);
        let missing = ["thesaurus".parse::<WellArg>().unwrap()];
        assert!(build_configs(&missing, &[], &[], &registry).is_err(), "thesaurus needs a description");
    }
}
