//! Phrasewells: configured generators of rephrasings, constraints, insights
//! and views, behind a registry so new kinds can be plugged in.

mod context;
mod dictionary;
mod presets;
mod prompts;
mod reader;
mod sound;
mod thesaurus;
mod words;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::ContextWell;
pub use dictionary::DictionaryWell;
pub use presets::{PresetError, Presets};
pub use prompts::{PromptError, PromptTemplates, Template};
pub use reader::{ReaderWell, MAX_BULLETS, MAX_REPHRASINGS, MIN_REPHRASINGS};
pub use sound::SoundWell;
pub use thesaurus::ThesaurusWell;
pub use words::WordsWell;

use crate::constraints::{Advice, Constraint, ConstraintError};
use crate::exec::Execution;
use crate::lm::{InstructBackend, LmError, LogitBackend};
use crate::model::{ConfigError, ContextSlice, InletId, Rephrasing, WellConfig, WellKind};
use crate::phonology::Phonology;
use crate::pos::Tagger;
use crate::search::{Histogram, SearchError};

/// Token-level annotation a well contributes to every pooled rephrasing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ViewKind {
    Pos,
    LogProb,
    Phonemes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "camelCase")]
pub enum Insight {
    TextBullets(Vec<String>),
    Histogram(Histogram),
    Definition(String),
    #[serde(rename_all = "camelCase")]
    PronunciationAnnotation {
        text: String,
        rendering: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        alternates: Vec<String>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WellOutput {
    pub rephrasings: Vec<Rephrasing>,
    pub insights: Vec<Insight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_contribution: Option<ViewKind>,
    pub emitted_constraints: Vec<Constraint>,
}

/// What a well kind can do, and the parameters it understands.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WellDescriptor {
    pub kind: WellKind,
    pub generates: bool,
    pub constrains: bool,
    pub insights: bool,
    pub views: bool,
    pub needs_description: bool,
    /// Parameter name to a short description of its value.
    pub parameters: BTreeMap<String, String>,
}

impl WellDescriptor {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: WellKind::new(kind),
            generates: false,
            constrains: false,
            insights: false,
            views: false,
            needs_description: false,
            parameters: BTreeMap::new(),
        }
    }

    pub fn param(mut self, name: &str, about: &str) -> Self {
        self.parameters.insert(name.to_owned(), about.to_owned());
        self
    }
}

#[derive(Debug, Error)]
pub enum WellError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] LmError),
    #[error("no {0} backend is configured")]
    MissingBackend(&'static str),
    #[error(transparent)]
    Search(SearchError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

impl From<SearchError> for WellError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Backend(b) => WellError::Backend(b),
            other => WellError::Search(other),
        }
    }
}

impl WellError {
    /// True when the failure came from a language-model backend.
    pub fn is_backend(&self) -> bool {
        matches!(self, WellError::Backend(_) | WellError::MissingBackend(_))
    }
}

/// Shared resources handed to every well run.
#[derive(Clone)]
pub struct WellServices {
    pub logit: Option<Arc<dyn LogitBackend>>,
    pub instruct: Option<Arc<dyn InstructBackend>>,
    pub phonology: Arc<Phonology>,
    pub tagger: Arc<dyn Tagger>,
    pub prompts: Arc<PromptTemplates>,
    pub exec: Execution,
}

impl WellServices {
    pub fn new(
        logit: Option<Arc<dyn LogitBackend>>,
        instruct: Option<Arc<dyn InstructBackend>>,
    ) -> Self {
        Self {
            logit,
            instruct,
            phonology: Arc::new(Phonology::bundled()),
            tagger: crate::pos::default_tagger(),
            prompts: Arc::new(PromptTemplates::bundled()),
            exec: Execution::default(),
        }
    }

    pub fn logit(&self) -> Result<&dyn LogitBackend, WellError> {
        self.logit.as_deref().ok_or(WellError::MissingBackend("logit"))
    }

    pub fn instruct(&self) -> Result<&dyn InstructBackend, WellError> {
        self.instruct.as_deref().ok_or(WellError::MissingBackend("instruct"))
    }
}

/// The inlet a well runs against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WellContext {
    pub inlet_id: InletId,
    pub generation: u64,
    pub slice: ContextSlice,
}

pub struct WellRun<'a> {
    pub config: &'a WellConfig,
    pub context: &'a WellContext,
    /// Merged advice from every active constraint.
    pub advice: &'a Advice,
    pub services: &'a WellServices,
    pub seed: Option<u64>,
}

/// A phrasewell kind. Implementations are stateless between runs.
pub trait Well: Send + Sync {
    fn descriptor(&self) -> WellDescriptor;

    /// Kind-specific configuration checks on top of [`WellConfig::validate`].
    fn validate(&self, config: &WellConfig) -> Result<(), ConfigError> {
        config.validate()
    }

    /// Constraints this configuration emits, known before any well runs so
    /// that advice can be computed for the generators.
    fn constraints(
        &self,
        _config: &WellConfig,
        _context: &WellContext,
        _services: &WellServices,
    ) -> Result<Vec<Constraint>, WellError> {
        Ok(Vec::new())
    }

    fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError>;
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("well kind {0} is already registered")]
pub struct DuplicateKind(pub WellKind);

/// Well kinds by name.
#[derive(Clone, Default)]
pub struct WellRegistry {
    wells: BTreeMap<WellKind, Arc<dyn Well>>,
}

impl WellRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The six built-in kinds.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        let builtins: [Arc<dyn Well>; 6] = [
            Arc::new(WordsWell),
            Arc::new(ThesaurusWell),
            Arc::new(ReaderWell),
            Arc::new(ContextWell),
            Arc::new(SoundWell),
            Arc::new(DictionaryWell),
        ];
        for w in builtins {
            r.register(w).expect("built-in kinds are distinct");
        }
        r
    }

    pub fn register(&mut self, well: Arc<dyn Well>) -> Result<(), DuplicateKind> {
        let kind = well.descriptor().kind;
        if self.wells.contains_key(&kind) {
            return Err(DuplicateKind(kind));
        }
        self.wells.insert(kind, well);
        Ok(())
    }

    pub fn get(&self, kind: &WellKind) -> Option<&Arc<dyn Well>> {
        self.wells.get(kind)
    }

    pub fn descriptors(&self) -> Vec<WellDescriptor> {
        self.wells.values().map(|w| w.descriptor()).collect()
    }

    /// Validates `config` against its kind.
    pub fn validate(&self, config: &WellConfig) -> Result<(), ConfigError> {
        self.get(&config.kind)
            .ok_or_else(|| ConfigError::UnknownKind(config.kind.clone()))?
            .validate(config)
    }
}

/// Builds rephrasings from instruct items, ranked by position.
pub fn rephrasings_from_items(
    items: &[String],
    config: &WellConfig,
    generation: u64,
) -> Vec<Rephrasing> {
    let mut seen = std::collections::HashSet::new();
    items
        .iter()
        .enumerate()
        .filter_map(|(i, text)| Rephrasing::new(config.well_id.clone(), text, generation, -(i as f64)))
        .filter(|r| seen.insert(r.text.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl Well for Echo {
        fn descriptor(&self) -> WellDescriptor {
            WellDescriptor {
                generates: true,
                ..WellDescriptor::new("echo")
            }
        }

        fn run(&self, run: &WellRun<'_>) -> Result<WellOutput, WellError> {
            Ok(WellOutput {
                rephrasings: rephrasings_from_items(
                    &[run.context.slice.selection.clone()],
                    run.config,
                    run.context.generation,
                ),
                ..WellOutput::default()
            })
        }
    }

    #[test]
    fn registry_accepts_new_kinds_once() {
        let mut r = WellRegistry::builtin();
        assert_eq!(r.descriptors().len(), 6);
        r.register(Arc::new(Echo)).unwrap();
        assert_eq!(
            r.register(Arc::new(Echo)),
            Err(DuplicateKind(WellKind::new("echo")))
        );
        assert!(r.get(&WellKind::new("echo")).is_some());
        assert!(matches!(
            r.validate(&WellConfig::new("x", "nope")),
            Err(ConfigError::UnknownKind(_))
        ));
    }

    #[test]
    fn insight_json_shape() {
        let v = serde_json::to_value(Insight::Definition("δ".into())).unwrap();
        assert_eq!(v, serde_json::json!({"kind": "definition", "body": "δ"}));
        let v = serde_json::to_value(Insight::TextBullets(vec!["a".into()])).unwrap();
        assert_eq!(v["kind"], "textBullets");
    }
}
