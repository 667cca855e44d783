//! Built-in prompt descriptions for the thesaurus, reader and dictionary
//! wells, cycled by the UI's die button. User lists in a presets directory
//! (`{kind}.json`, a JSON array of strings) are appended to the built-ins.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::model::WellKind;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("reading presets: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing {file}: {source}")]
    Parse {
        file: String,
        source: serde_json::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presets {
    lists: BTreeMap<String, Vec<String>>,
}

const BUNDLED: [(&str, &str); 3] = [
    (WellKind::THESAURUS, include_str!("../../data/presets/thesaurus.json")),
    (WellKind::READER, include_str!("../../data/presets/reader.json")),
    (WellKind::DICTIONARY, include_str!("../../data/presets/dictionary.json")),
];

impl Presets {
    pub fn bundled() -> Self {
        let lists = BUNDLED
            .iter()
            .map(|(kind, json)| {
                let list: Vec<String> = serde_json::from_str(json).expect("bundled presets parse");
                ((*kind).to_owned(), list)
            })
            .collect();
        Self { lists }
    }

    /// Built-ins plus every `*.json` list in `dir`.
    pub fn with_dir(dir: &Path) -> Result<Self, PresetError> {
        let mut p = Self::bundled();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let path = e.path();
            if path.extension().and_then(|x| x.to_str()) != Some("json") {
                continue;
            }
            let Some(kind) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let extra: Vec<String> = serde_json::from_str(&std::fs::read_to_string(&path)?)
                .map_err(|source| PresetError::Parse {
                    file: path.display().to_string(),
                    source,
                })?;
            let list = p.lists.entry(kind.to_owned()).or_default();
            for d in extra {
                if !d.trim().is_empty() && !list.contains(&d) {
                    list.push(d);
                }
            }
        }
        Ok(p)
    }

    pub fn list(&self, kind: &WellKind) -> &[String] {
        self.lists.get(kind.as_str()).map_or(&[], Vec::as_slice)
    }

    pub fn all(&self) -> &BTreeMap<String, Vec<String>> {
        &self.lists
    }

    /// The preset at `index`, wrapping around the list.
    pub fn cycle(&self, kind: &WellKind, index: usize) -> Option<&str> {
        let list = self.list(kind);
        (!list.is_empty()).then(|| list[index % list.len()].as_str())
    }
}
