//! Typed constraints over phrases: definitions, advice for generators, and
//! graded scoring of candidate rephrasings.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::matching::MatchMode;
use crate::model::{Rephrasing, WellId, WellKind};
use crate::phonology::{self, Phoneme, SoundMode, SoundRef};
use crate::pos::{tag_sequence_matches, PosTag};

/// Tokens budgeted per requested word when word-count advice sets the
/// search length.
pub const DEFAULT_TOKENS_PER_WORD: usize = 2;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConstraintError {
    #[error("range minimum {min} exceeds maximum {max}")]
    InvertedRange { min: f64, max: f64 },
    #[error("log-probability bounds must be <= 0 (got {0})")]
    PositiveBound(f64),
    #[error("constraint needs a non-empty pattern")]
    EmptyPattern,
    #[error("constraint {constraint} needs the {annotation} annotation")]
    MissingAnnotation {
        constraint: String,
        annotation: Annotation,
    },
    #[error("invalid constraint: {0}")]
    Invalid(String),
}

/// Rephrasing annotations a constraint may depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Annotation {
    Pos,
    Phonemes,
    LogProb,
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Annotation::Pos => "part-of-speech",
            Annotation::Phonemes => "phoneme",
            Annotation::LogProb => "log-probability",
        })
    }
}

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: usize,
    pub max: usize,
}

impl IntRange {
    pub fn new(min: usize, max: usize) -> Result<Self, ConstraintError> {
        if min > max {
            return Err(ConstraintError::InvertedRange {
                min: min as f64,
                max: max as f64,
            });
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, x: usize) -> bool {
        self.min <= x && x <= self.max
    }

    /// `max(0, 1 - distance / max(span, 1))`, where distance is the gap to
    /// the nearest bound.
    pub fn graded(&self, x: usize) -> f64 {
        let distance = if x < self.min {
            self.min - x
        } else {
            x.saturating_sub(self.max)
        };
        let width = (self.max - self.min).max(1);
        (1.0 - distance as f64 / width as f64).max(0.0)
    }
}

/// Closed log-probability interval. `min` may be negative infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogProbBand {
    pub min: f64,
    pub max: f64,
}

impl LogProbBand {
    pub fn new(min: f64, max: f64) -> Result<Self, ConstraintError> {
        if min.is_nan() || max.is_nan() {
            return Err(ConstraintError::Invalid("band bound is NaN".into()));
        }
        for b in [min, max] {
            if b > 0.0 {
                return Err(ConstraintError::PositiveBound(b));
            }
        }
        if min > max {
            return Err(ConstraintError::InvertedRange { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, lp: f64) -> bool {
        self.min <= lp && lp <= self.max
    }
}

impl Serialize for LogProbBand {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let finite = |v: f64| v.is_finite().then_some(v);
        json!({"min": finite(self.min), "max": finite(self.max)}).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogProbBand {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            min: Option<f64>,
            #[serde(default)]
            max: Option<f64>,
        }
        let raw = Raw::deserialize(d)?;
        LogProbBand::new(
            raw.min.unwrap_or(f64::NEG_INFINITY),
            raw.max.unwrap_or(0.0),
        )
        .map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintSpec {
    PosSequence { tags: Vec<PosTag>, mode: MatchMode },
    SoundRef(SoundRef),
    WordCount(IntRange),
    SyllableCount(IntRange),
    LogProbBand(LogProbBand),
}

impl ConstraintSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintSpec::PosSequence { .. } => "posSequence",
            ConstraintSpec::SoundRef(_) => "soundRef",
            ConstraintSpec::WordCount(_) => "wordCount",
            ConstraintSpec::SyllableCount(_) => "syllableCount",
            ConstraintSpec::LogProbBand(_) => "logProbBand",
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, ConstraintSpec::PosSequence { .. } | ConstraintSpec::SoundRef(_))
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        match self {
            ConstraintSpec::PosSequence { tags, .. } if tags.is_empty() => {
                Err(ConstraintError::EmptyPattern)
            }
            ConstraintSpec::SoundRef(r) if r.phonemes.is_empty() => Err(ConstraintError::EmptyPattern),
            ConstraintSpec::WordCount(r) | ConstraintSpec::SyllableCount(r) => {
                IntRange::new(r.min, r.max).map(|_| ())
            }
            ConstraintSpec::LogProbBand(b) => LogProbBand::new(b.min, b.max).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// The annotation scoring needs, if any.
    pub fn needs(&self) -> Option<Annotation> {
        match self {
            ConstraintSpec::PosSequence { .. } => Some(Annotation::Pos),
            ConstraintSpec::SoundRef(_) | ConstraintSpec::SyllableCount(_) => {
                Some(Annotation::Phonemes)
            }
            ConstraintSpec::LogProbBand(_) => Some(Annotation::LogProb),
            ConstraintSpec::WordCount(_) => None,
        }
    }
}

/// A constraint emitted by a well. Applies to rephrasings from every well.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub id: String,
    pub source_well_id: WellId,
    pub spec: ConstraintSpec,
}

impl Constraint {
    pub fn new(
        id: impl Into<String>,
        source_well_id: WellId,
        spec: ConstraintSpec,
    ) -> Result<Self, ConstraintError> {
        spec.validate()?;
        Ok(Self {
            id: id.into(),
            source_well_id,
            spec,
        })
    }

    pub fn kind(&self) -> &'static str {
        self.spec.kind()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WireConstraint {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    payload: Value,
    source_well_id: WellId,
}

impl Serialize for Constraint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (mode, payload) = match &self.spec {
            ConstraintSpec::PosSequence { tags, mode } => (
                Some(mode.as_str().to_owned()),
                json!({"tags": tags.iter().map(|t| t.as_str()).collect::<Vec<_>>()}),
            ),
            ConstraintSpec::SoundRef(r) => (
                Some(r.mode.as_str().to_owned()),
                json!({
                    "phonemes": r.phonemes.iter().map(Phoneme::to_string).collect::<Vec<_>>(),
                    "mode": r.mode.as_str(),
                }),
            ),
            ConstraintSpec::WordCount(r) | ConstraintSpec::SyllableCount(r) => {
                (None, json!({"min": r.min, "max": r.max}))
            }
            ConstraintSpec::LogProbBand(b) => (None, serde_json::to_value(b).expect("band")),
        };
        WireConstraint {
            id: self.id.clone(),
            kind: self.kind().to_owned(),
            mode,
            payload,
            source_well_id: self.source_well_id.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Constraint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = WireConstraint::deserialize(d)?;
        let spec = spec_from_wire(&w.kind, w.mode.as_deref(), &w.payload).map_err(D::Error::custom)?;
        Constraint::new(w.id, w.source_well_id, spec).map_err(D::Error::custom)
    }
}

fn spec_from_wire(kind: &str, mode: Option<&str>, payload: &Value) -> Result<ConstraintSpec, String> {
    let field = |name: &str| payload.get(name).ok_or_else(|| format!("{kind} payload lacks {name:?}"));
    let range = || -> Result<IntRange, String> {
        let r: IntRange = serde_json::from_value(payload.clone()).map_err(|e| e.to_string())?;
        IntRange::new(r.min, r.max).map_err(|e| e.to_string())
    };
    match kind {
        "posSequence" => {
            let tags: Vec<String> =
                serde_json::from_value(field("tags")?.clone()).map_err(|e| e.to_string())?;
            let tags = tags.iter().map(|t| t.parse()).collect::<Result<Vec<PosTag>, _>>()?;
            let mode = mode.unwrap_or("contains").parse()?;
            Ok(ConstraintSpec::PosSequence { tags, mode })
        }
        "soundRef" => {
            let phonemes: Vec<String> =
                serde_json::from_value(field("phonemes")?.clone()).map_err(|e| e.to_string())?;
            let phonemes = phonemes
                .iter()
                .map(|p| p.parse())
                .collect::<Result<Vec<Phoneme>, _>>()
                .map_err(|e| e.to_string())?;
            let mode_text = payload
                .get("mode")
                .and_then(Value::as_str)
                .or(mode)
                .ok_or("soundRef needs a mode")?;
            let r = SoundRef::new(phonemes, mode_text.parse()?).map_err(|e| e.to_string())?;
            Ok(ConstraintSpec::SoundRef(r))
        }
        "wordCount" => Ok(ConstraintSpec::WordCount(range()?)),
        "syllableCount" => Ok(ConstraintSpec::SyllableCount(range()?)),
        "logProbBand" => {
            let b: LogProbBand = serde_json::from_value(payload.clone()).map_err(|e| e.to_string())?;
            Ok(ConstraintSpec::LogProbBand(b))
        }
        other => Err(format!("unknown constraint kind {other:?}")),
    }
}

/// Guidance derived from constraints for one generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Advice {
    pub prompt_clauses: Vec<String>,
    pub search_params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hard_filters: Vec<String>,
}

impl Advice {
    pub fn is_empty(&self) -> bool {
        self.prompt_clauses.is_empty() && self.search_params.is_empty() && self.hard_filters.is_empty()
    }

    /// Combines advice from several constraints. Clauses are concatenated;
    /// numeric search bounds are intersected.
    pub fn merge(items: impl IntoIterator<Item = Advice>) -> Advice {
        let mut out = Advice::default();
        for a in items {
            out.prompt_clauses.extend(a.prompt_clauses);
            for f in a.hard_filters {
                if !out.hard_filters.contains(&f) {
                    out.hard_filters.push(f);
                }
            }
            for (k, v) in a.search_params {
                let merged = match (out.search_params.get(&k), k.as_str()) {
                    (Some(old), "minWords" | "bandMin") => max_value(old, &v),
                    (Some(old), "maxWords" | "maxTokens" | "bandMax") => min_value(old, &v),
                    _ => v,
                };
                out.search_params.insert(k, merged);
            }
        }
        out
    }

    pub fn param_usize(&self, key: &str) -> Option<usize> {
        self.search_params.get(key).and_then(Value::as_u64).map(|v| v as usize)
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.search_params.get(key).and_then(Value::as_f64)
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.search_params.get(key).and_then(Value::as_str)
    }
}

fn pick(a: &Value, b: &Value, take_max: bool) -> Value {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if (x > y) == take_max => a.clone(),
        (Some(_), Some(_)) => b.clone(),
        // null stands for an unbounded band minimum
        (None, _) if take_max => b.clone(),
        (_, None) if take_max => a.clone(),
        _ => b.clone(),
    }
}

fn max_value(a: &Value, b: &Value) -> Value {
    pick(a, b, true)
}

fn min_value(a: &Value, b: &Value) -> Value {
    pick(a, b, false)
}

fn with_article(word: &str) -> String {
    let article = if word.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
    format!("{article} {word}")
}

fn tag_phrase(tags: &[PosTag]) -> String {
    tags.iter()
        .map(|t| with_article(t.describe()))
        .collect::<Vec<_>>()
        .join(" followed by ")
}

fn plain_phonemes(p: &[Phoneme]) -> String {
    phonology::render_plain(p)
}

/// Advice that constraint `c` gives to a well of `target` kind. The context
/// well receives search parameters; prompt wells receive plain-English
/// clauses; a probability band gives prompt wells nothing (it is applied by
/// rescoring instead).
pub fn advice_for(c: &Constraint, target: &WellKind) -> Advice {
    let mut advice = Advice::default();
    if target.is(WellKind::CONTEXT) {
        let p = &mut advice.search_params;
        match &c.spec {
            ConstraintSpec::WordCount(r) => {
                p.insert("minWords".into(), json!(r.min));
                p.insert("maxWords".into(), json!(r.max));
                p.insert("maxTokens".into(), json!(r.max.max(1) * DEFAULT_TOKENS_PER_WORD));
            }
            ConstraintSpec::PosSequence { tags, mode } => {
                let pattern: Vec<&str> = tags.iter().map(|t| t.as_str()).collect();
                p.insert("posPattern".into(), json!(pattern.join(" ")));
                p.insert("mode".into(), json!(mode.as_str()));
            }
            ConstraintSpec::LogProbBand(b) => {
                p.insert("bandMin".into(), json!(b.min.is_finite().then_some(b.min)));
                p.insert("bandMax".into(), json!(b.max));
                advice.hard_filters.push("logProbBand".into());
            }
            ConstraintSpec::SoundRef(_) | ConstraintSpec::SyllableCount(_) => {}
        }
        return advice;
    }
    // Words and Sound wells generate nothing, so there is nothing to advise.
    if target.is(WellKind::WORDS) || target.is(WellKind::SOUND) {
        return advice;
    }
    let clause = match &c.spec {
        ConstraintSpec::WordCount(r) if r.min == r.max => {
            let unit = if r.min == 1 { "word" } else { "words" };
            Some(format!("aim to produce exactly {} {unit}", r.min))
        }
        ConstraintSpec::WordCount(r) => {
            Some(format!("aim to produce between {} and {} words", r.min, r.max))
        }
        ConstraintSpec::SyllableCount(r) if r.min == r.max => {
            let unit = if r.min == 1 { "syllable" } else { "syllables" };
            Some(format!("aim for exactly {} {unit} in total", r.min))
        }
        ConstraintSpec::SyllableCount(r) => {
            Some(format!("aim for between {} and {} syllables in total", r.min, r.max))
        }
        ConstraintSpec::PosSequence { tags, mode } => {
            let seq = tag_phrase(tags);
            Some(match mode {
                MatchMode::Exact => format!("each phrase should consist of exactly {seq}"),
                MatchMode::StartsWith => format!("each phrase should start with {seq}"),
                MatchMode::EndsWith => format!("each phrase should end with {seq}"),
                MatchMode::Contains => format!("each phrase should contain {seq}"),
                MatchMode::InOrder => {
                    let parts: Vec<String> = tags.iter().map(|t| with_article(t.describe())).collect();
                    format!("each phrase should contain {}, in that order", parts.join(", then "))
                }
            })
        }
        ConstraintSpec::SoundRef(r) => {
            let sounds = plain_phonemes(&r.phonemes);
            Some(match r.mode {
                SoundMode::StartsWith => format!("each phrase should start with the sounds {sounds}"),
                SoundMode::EndsWith => format!("each phrase should end with the sounds {sounds}"),
                SoundMode::Contains => format!("each phrase should contain the sounds {sounds}"),
                SoundMode::RhymesWith => format!(
                    "each phrase should rhyme, ending with the sounds {}",
                    plain_phonemes(phonology::rhyme_suffix(&r.phonemes))
                ),
            })
        }
        ConstraintSpec::LogProbBand(_) => None,
    };
    advice.prompt_clauses.extend(clause);
    advice
}

/// Scores `r` against `c` in `[0, 1]`. Symbolic kinds are 0 or 1; word and
/// syllable counts are graded.
pub fn score_constraint(c: &Constraint, r: &Rephrasing) -> Result<f64, ConstraintError> {
    let missing = |annotation| ConstraintError::MissingAnnotation {
        constraint: c.id.clone(),
        annotation,
    };
    let binary = |b: bool| if b { 1.0 } else { 0.0 };
    Ok(match &c.spec {
        ConstraintSpec::PosSequence { tags, mode } => {
            let have = r.pos_tags().ok_or_else(|| missing(Annotation::Pos))?;
            binary(tag_sequence_matches(&have, tags, *mode))
        }
        ConstraintSpec::SoundRef(reference) => {
            let have = r.phonemes().ok_or_else(|| missing(Annotation::Phonemes))?;
            binary(!have.is_empty() && phonology::sound_matches(&have, reference))
        }
        ConstraintSpec::WordCount(range) => range.graded(r.word_count()),
        ConstraintSpec::SyllableCount(range) => {
            let have = r.phonemes().ok_or_else(|| missing(Annotation::Phonemes))?;
            range.graded(phonology::syllable_count(&have))
        }
        ConstraintSpec::LogProbBand(band) => {
            let lp = r.total_log_prob.ok_or_else(|| missing(Annotation::LogProb))?;
            binary(band.contains(lp))
        }
    })
}

/// Arithmetic mean of `scores` (1.0 when empty) and whether all are fully
/// satisfied.
pub fn aggregate(scores: impl IntoIterator<Item = f64>) -> (f64, bool) {
    let (mut sum, mut n, mut all) = (0.0, 0usize, true);
    for s in scores {
        sum += s;
        n += 1;
        all &= s >= 1.0;
    }
    if n == 0 {
        (1.0, true)
    } else {
        (sum / n as f64, all)
    }
}

/// Per-constraint scores keyed by constraint id, the mean, and the
/// fully-matched flag.
pub fn score_all(
    constraints: &[Constraint],
    r: &Rephrasing,
) -> Result<(BTreeMap<String, f64>, f64, bool), ConstraintError> {
    let mut scores = BTreeMap::new();
    for c in constraints {
        scores.insert(c.id.clone(), score_constraint(c, r)?);
    }
    let (overall, fully) = aggregate(scores.values().copied());
    Ok((scores, overall, fully))
}
