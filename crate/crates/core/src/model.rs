//! Shared domain types: documents and their inlets, rephrasings with their
//! token views, and well configuration.
//!
//! All ranges are half-open intervals over Unicode scalar values (`char`s),
//! never bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::phonology::Phoneme;
use crate::pos::PosTag;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Identifies a highlighted revision site.
    InletId
);
string_id!(
    /// Identifies a configured well instance (not its kind).
    WellId
);

/// Half-open character interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharRange {
    pub start: usize,
    pub end: usize,
}

impl CharRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &CharRange) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for CharRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("range {range} is outside the document (length {len})")]
    OutOfBounds { range: CharRange, len: usize },
    #[error("range {range} overlaps inlet {inlet}")]
    OverlappingInlet { range: CharRange, inlet: InletId },
    #[error("range {0} is empty")]
    EmptyRange(CharRange),
    #[error("unknown inlet {0}")]
    UnknownInlet(InletId),
    #[error("rephrasing generation {got} does not match inlet generation {current}")]
    StaleGeneration { current: u64, got: u64 },
    #[error("replacement text must not be empty")]
    EmptyReplacement,
}

/// A highlighted span of the working text that wells rephrase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Inlet {
    pub id: InletId,
    #[serde(flatten)]
    pub range: CharRange,
    #[serde(default)]
    pub active_well_ids: BTreeSet<WellId>,
    #[serde(default)]
    pub generation: u64,
}

/// The three-way split of the document around an inlet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSlice {
    pub before: String,
    pub selection: String,
    pub after: String,
}

/// Working text plus its inlets. Mutations go through `&mut self`; callers
/// share snapshots by cloning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Document {
    #[serde(default)]
    pub id: String,
    text: String,
    #[serde(default)]
    inlets: Vec<Inlet>,
    #[serde(default)]
    revision: u64,
    #[serde(default)]
    next_inlet_seq: u64,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            inlets: Vec::new(),
            revision: 0,
            next_inlet_seq: 1,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn inlets(&self) -> &[Inlet] {
        &self.inlets
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Length in characters.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn inlet(&self, id: &InletId) -> Result<&Inlet, DocumentError> {
        self.inlets
            .iter()
            .find(|i| &i.id == id)
            .ok_or_else(|| DocumentError::UnknownInlet(id.clone()))
    }

    fn inlet_mut(&mut self, id: &InletId) -> Result<&mut Inlet, DocumentError> {
        self.inlets
            .iter_mut()
            .find(|i| &i.id == id)
            .ok_or_else(|| DocumentError::UnknownInlet(id.clone()))
    }

    /// Highlights `range` as a new inlet. The new inlet starts at generation 0.
    pub fn create_inlet(&mut self, range: CharRange) -> Result<&Inlet, DocumentError> {
        if range.is_empty() {
            return Err(DocumentError::EmptyRange(range));
        }
        let len = self.char_len();
        if range.end > len {
            return Err(DocumentError::OutOfBounds { range, len });
        }
        if let Some(other) = self.inlets.iter().find(|i| i.range.overlaps(&range)) {
            return Err(DocumentError::OverlappingInlet {
                range,
                inlet: other.id.clone(),
            });
        }
        let seq = self.next_inlet_seq.max(1);
        self.next_inlet_seq = seq + 1;
        let id = if self.id.is_empty() {
            InletId(format!("i{seq}"))
        } else {
            InletId(format!("{}-i{seq}", self.id))
        };
        self.inlets.push(Inlet {
            id: id.clone(),
            range,
            active_well_ids: BTreeSet::new(),
            generation: 0,
        });
        self.inlets.sort_by_key(|i| i.range.start);
        self.revision += 1;
        self.inlet(&id)
    }

    pub fn remove_inlet(&mut self, id: &InletId) -> Result<Inlet, DocumentError> {
        let pos = self
            .inlets
            .iter()
            .position(|i| &i.id == id)
            .ok_or_else(|| DocumentError::UnknownInlet(id.clone()))?;
        self.revision += 1;
        Ok(self.inlets.remove(pos))
    }

    pub fn set_active_wells(
        &mut self,
        id: &InletId,
        wells: BTreeSet<WellId>,
    ) -> Result<(), DocumentError> {
        self.inlet_mut(id)?.active_well_ids = wells;
        self.revision += 1;
        Ok(())
    }

    /// Records a change that leaves the text and inlets alone, such as a
    /// well configuration edit.
    pub fn touch(&mut self) {
        self.revision += 1;
    }

    /// Starts a new run on `id`, invalidating any in-flight results, and
    /// returns the new generation.
    pub fn begin_run(&mut self, id: &InletId) -> Result<u64, DocumentError> {
        let inlet = self.inlet_mut(id)?;
        inlet.generation += 1;
        Ok(inlet.generation)
    }

    /// Replaces the characters in `range` with `replacement`.
    ///
    /// Inlets entirely after the edit shift by the length delta; an inlet
    /// containing the edit is resized. Edits that straddle an inlet boundary
    /// are rejected. Every inlet's generation is bumped since its context
    /// changed.
    pub fn splice(&mut self, range: CharRange, replacement: &str) -> Result<(), DocumentError> {
        let len = self.char_len();
        if range.start > range.end {
            return Err(DocumentError::EmptyRange(range));
        }
        if range.end > len {
            return Err(DocumentError::OutOfBounds { range, len });
        }
        let new_len = replacement.chars().count();
        let delta = new_len as i64 - range.len() as i64;

        let mut updated = self.inlets.clone();
        for inlet in &mut updated {
            let r = inlet.range;
            if r.end <= range.start {
                // untouched, including insertions right at the inlet end
            } else if r.start >= range.end {
                inlet.range = shift(r, delta);
            } else if range.start >= r.start && range.end <= r.end {
                let end = (r.end as i64 + delta) as usize;
                let resized = CharRange::new(r.start, end);
                if resized.is_empty() {
                    return Err(DocumentError::EmptyRange(resized));
                }
                inlet.range = resized;
            } else {
                return Err(DocumentError::OverlappingInlet {
                    range,
                    inlet: inlet.id.clone(),
                });
            }
            inlet.generation += 1;
        }

        let start_byte = char_to_byte(&self.text, range.start);
        let end_byte = char_to_byte(&self.text, range.end);
        self.text.replace_range(start_byte..end_byte, replacement);
        self.inlets = updated;
        self.revision += 1;
        Ok(())
    }

    /// Places a rephrasing into its inlet. Suggestions produced for an older
    /// generation are rejected.
    pub fn accept_rephrasing(
        &mut self,
        id: &InletId,
        rephrasing: &Rephrasing,
    ) -> Result<(), DocumentError> {
        let inlet = self.inlet(id)?;
        if rephrasing.generation != inlet.generation {
            return Err(DocumentError::StaleGeneration {
                current: inlet.generation,
                got: rephrasing.generation,
            });
        }
        if rephrasing.text.is_empty() {
            return Err(DocumentError::EmptyReplacement);
        }
        let range = inlet.range;
        self.splice(range, &rephrasing.text)
    }

    pub fn slice_context(&self, id: &InletId) -> Result<ContextSlice, DocumentError> {
        let inlet = self.inlet(id)?;
        let start = char_to_byte(&self.text, inlet.range.start);
        let end = char_to_byte(&self.text, inlet.range.end);
        Ok(ContextSlice {
            before: self.text[..start].to_owned(),
            selection: self.text[start..end].to_owned(),
            after: self.text[end..].to_owned(),
        })
    }
}

fn shift(r: CharRange, delta: i64) -> CharRange {
    CharRange::new((r.start as i64 + delta) as usize, (r.end as i64 + delta) as usize)
}

fn char_to_byte(text: &str, chars: usize) -> usize {
    text.char_indices()
        .nth(chars)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

/// One surface token of a rephrasing with whatever views have been attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TokenView {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<PosTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phonemes: Option<Vec<Phoneme>>,
}

impl TokenView {
    pub fn new(surface: impl Into<String>) -> Self {
        Self {
            surface: surface.into(),
            pos: None,
            log_prob: None,
            phonemes: None,
        }
    }

    /// Whitespace and punctuation tokens carry no word-level views.
    pub fn is_word(&self) -> bool {
        self.surface.chars().any(char::is_alphanumeric)
    }
}

/// Splits text into word runs, whitespace runs and single punctuation
/// characters, so that the pieces concatenate back to the input.
pub fn surface_tokens(text: &str) -> Vec<String> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Word,
        Space,
        Other,
    }
    fn class(c: char) -> Class {
        if c.is_alphanumeric() || c == '\'' || c == '’' || c == '-' {
            Class::Word
        } else if c.is_whitespace() {
            Class::Space
        } else {
            Class::Other
        }
    }
    let mut out: Vec<String> = Vec::new();
    let mut prev: Option<Class> = None;
    for c in text.chars() {
        let k = class(c);
        match (prev, out.last_mut()) {
            (Some(p), Some(last)) if p == k && k != Class::Other => last.push(c),
            _ => out.push(c.to_string()),
        }
        prev = Some(k);
    }
    out
}

/// A candidate replacement phrase for an inlet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Rephrasing {
    pub id: String,
    pub text: String,
    pub tokens: Vec<TokenView>,
    pub well_id: WellId,
    /// Every well that proposed this exact text, after pooling.
    #[serde(default)]
    pub provenance: Vec<WellId>,
    pub internal_score: f64,
    #[serde(default)]
    pub constraint_scores: BTreeMap<String, f64>,
    pub overall_score: f64,
    #[serde(default = "default_true")]
    pub fully_matched: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_log_prob: Option<f64>,
    pub generation: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub color: String,
}

fn default_true() -> bool {
    true
}

impl Rephrasing {
    /// Builds an unscored rephrasing with surface tokens only. Returns `None`
    /// for blank text.
    pub fn new(well_id: WellId, text: &str, generation: u64, internal_score: f64) -> Option<Self> {
        let text = text.trim();
        if text.is_empty() {
            return None;
        }
        Some(Self {
            id: rephrasing_id(generation, text),
            text: text.to_owned(),
            tokens: surface_tokens(text).into_iter().map(TokenView::new).collect(),
            provenance: vec![well_id.clone()],
            well_id,
            internal_score,
            constraint_scores: BTreeMap::new(),
            overall_score: 1.0,
            fully_matched: true,
            total_log_prob: None,
            generation,
            color: String::new(),
        })
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }

    pub fn words(&self) -> impl Iterator<Item = &TokenView> {
        self.tokens.iter().filter(|t| t.is_word())
    }

    /// Word-token POS tags, or `None` if any word is untagged.
    pub fn pos_tags(&self) -> Option<Vec<PosTag>> {
        self.words().map(|t| t.pos).collect()
    }

    /// Concatenated word pronunciations, or `None` if any word lacks one.
    pub fn phonemes(&self) -> Option<Vec<Phoneme>> {
        let mut out = Vec::new();
        for t in self.words() {
            out.extend(t.phonemes.as_ref()?.iter().cloned());
        }
        Some(out)
    }

    pub fn set_scores(&mut self, scores: BTreeMap<String, f64>) {
        let (overall, fully) = crate::constraints::aggregate(scores.values().copied());
        self.constraint_scores = scores;
        self.overall_score = overall;
        self.fully_matched = fully;
    }
}

/// Stable identifier for a rephrasing within a generation.
pub fn rephrasing_id(generation: u64, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(generation.to_le_bytes());
    h.update(text.as_bytes());
    let digest = h.finalize();
    let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("r{generation}-{hex}")
}

/// Well kind name. The six built-in kinds have constants; registries may
/// add more.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WellKind(pub String);

impl WellKind {
    pub const WORDS: &'static str = "words";
    pub const THESAURUS: &'static str = "thesaurus";
    pub const READER: &'static str = "reader";
    pub const CONTEXT: &'static str = "context";
    pub const SOUND: &'static str = "sound";
    pub const DICTIONARY: &'static str = "dictionary";

    pub fn new(kind: impl Into<String>) -> Self {
        Self(kind.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is(&self, kind: &str) -> bool {
        self.0 == kind
    }

    /// Kinds whose configuration is driven by a plain-text description.
    pub fn needs_description(&self) -> bool {
        matches!(
            self.0.as_str(),
            Self::THESAURUS | Self::READER | Self::DICTIONARY
        )
    }
}

impl fmt::Display for WellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for WellKind {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("well {0} needs a non-empty description")]
    MissingDescription(WellId),
    #[error("well {well}: invalid parameter {key}: {reason}")]
    InvalidParameter {
        well: WellId,
        key: String,
        reason: String,
    },
    #[error("the words well cannot be deactivated")]
    WordsWellRequired,
    #[error("unknown well kind {0}")]
    UnknownKind(WellKind),
}

/// A configured well. Configs are document-wide; pools are per inlet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WellConfig {
    pub well_id: WellId,
    pub kind: WellKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_description: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_json::Value>,
    #[serde(default = "default_true")]
    pub active: bool,
}

impl WellConfig {
    pub fn new(well_id: impl Into<String>, kind: &str) -> Self {
        Self {
            well_id: WellId(well_id.into()),
            kind: WellKind::new(kind),
            prompt_description: None,
            parameters: BTreeMap::new(),
            active: true,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.prompt_description = Some(description.into());
        self
    }

    pub fn with_param(mut self, key: &str, value: serde_json::Value) -> Self {
        self.parameters.insert(key.to_owned(), value);
        self
    }

    pub fn description(&self) -> Option<&str> {
        self.prompt_description
            .as_deref()
            .map(str::trim)
            .filter(|d| !d.is_empty())
    }

    /// Checks the kind-independent invariants.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.kind.needs_description() && self.description().is_none() {
            return Err(ConfigError::MissingDescription(self.well_id.clone()));
        }
        if self.kind.is(WellKind::WORDS) && !self.active {
            return Err(ConfigError::WordsWellRequired);
        }
        Ok(())
    }

    pub fn param(&self, key: &str) -> Option<&serde_json::Value> {
        self.parameters.get(key)
    }

    pub fn param_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parameters.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| self.bad(key, "expected a number")),
        }
    }

    pub fn param_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.parameters.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|n| Some(n as usize))
                .ok_or_else(|| self.bad(key, "expected a non-negative integer")),
        }
    }

    pub fn param_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.parameters.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v.as_bool().map(Some).ok_or_else(|| self.bad(key, "expected a boolean")),
        }
    }

    pub fn param_str(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.parameters.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v.as_str().map(Some).ok_or_else(|| self.bad(key, "expected a string")),
        }
    }

    pub fn bad(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::InvalidParameter {
            well: self.well_id.clone(),
            key: key.to_owned(),
            reason: reason.into(),
        }
    }
}
