use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use super::Phoneme;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("reading lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Pronouncing dictionary in CMU format: `word PH1 PH2 ...`, with
/// alternates written `word(2) ...`. Lookups are case-insensitive and keep
/// variants in file order.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<Vec<Phoneme>>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries: HashMap<String, Vec<Vec<Phoneme>>> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with(";;;") {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or_default();
            let word = match head.find('(') {
                Some(p) if head.ends_with(')') => &head[..p],
                _ => head,
            };
            let phonemes = parts
                .map(str::parse::<Phoneme>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| LexiconError::Parse { line: i + 1, message: e.to_string() })?;
            if phonemes.is_empty() {
                return Err(LexiconError::Parse {
                    line: i + 1,
                    message: format!("{word:?} has no phonemes"),
                });
            }
            entries.entry(word.to_lowercase()).or_default().push(phonemes);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn variants(&self, word: &str) -> Option<&[Vec<Phoneme>]> {
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variants_keep_order() {
        let lex = Lexicon::parse("read R IY1 D\nREAD(2) R EH1 D\n;;; comment\n").unwrap();
        let v = lex.variants("Read").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1][1].to_string(), "EH1");
    }

    #[test]
    fn rejects_bad_symbols() {
        assert!(Lexicon::parse("x QQ1").is_err());
        assert!(Lexicon::parse("x").is_err());
    }
}
