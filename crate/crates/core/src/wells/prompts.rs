//! Versioned prompt templates loaded from JSON. Placeholders are written
//! `{name}` and substituted in a single pass, so substituted text is never
//! re-expanded.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUNDLED: &str = include_str!("../../data/prompts.json");

pub const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("reading prompt templates: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing prompt templates: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("prompt template version {0} is not supported")]
    Version(u32),
    #[error("prompt set lacks template {0:?}")]
    MissingTemplate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub system: String,
    pub user: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub version: u32,
    pub templates: BTreeMap<String, Template>,
    #[serde(default)]
    pub clauses: BTreeMap<String, String>,
}

impl PromptTemplates {
    pub const REQUIRED: [&'static str; 4] = ["thesaurus", "reader_critique", "reader_rephrase", "dictionary"];

    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let t: PromptTemplates = serde_json::from_str(text)?;
        if t.version != SUPPORTED_VERSION {
            return Err(PromptError::Version(t.version));
        }
        for name in Self::REQUIRED {
            if !t.templates.contains_key(name) {
                return Err(PromptError::MissingTemplate(name.to_owned()));
            }
        }
        Ok(t)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled prompt templates are valid")
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn template(&self, name: &str) -> &Template {
        // presence of the required names is checked at parse time
        &self.templates[name]
    }

    pub fn clause(&self, name: &str) -> &str {
        self.clauses.get(name).map_or("", String::as_str)
    }

    /// Renders a template's system and user text.
    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> (String, String) {
        let t = self.template(name);
        (fill(&t.system, vars), fill(&t.user, vars))
    }

    /// Advice clauses as a guideline list, or empty when there are none.
    pub fn advice_block(&self, clauses: &[String]) -> String {
        if clauses.is_empty() {
            return String::new();
        }
        let mut out = self.clause("advice_header").to_owned();
        for c in clauses {
            out.push_str(&fill(self.clause("advice_item"), &[("clause", c)]));
        }
        out
    }
}

/// Replaces `{name}` placeholders whose name is in `vars`; anything else is
/// copied through unchanged.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let value = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (*v, close))
        });
        match value {
            Some((v, close)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
