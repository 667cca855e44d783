use std::collections::HashMap;

use super::PosTag;

/// Most-likely coarse tag per lower-cased word.
#[derive(Clone, Debug, Default)]
pub struct PosLexicon {
    tags: HashMap<String, PosTag>,
}

impl PosLexicon {
    /// Parses `word<TAB>TAG` lines; `#` starts a comment line. Unknown tags
    /// are skipped.
    pub fn parse(text: &str) -> Self {
        let mut tags = HashMap::new();
        for line in text.lines() {
            if line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(word), Some(tag)) = (parts.next(), parts.next()) else {
                continue;
            };
            if let Ok(tag) = tag.trim().parse::<PosTag>() {
                tags.insert(word.trim().to_lowercase(), tag);
            }
        }
        Self { tags }
    }

    pub fn get(&self, word: &str) -> Option<PosTag> {
        self.tags.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}
