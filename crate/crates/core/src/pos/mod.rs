//! Coarse part-of-speech tagging for phrases, used by the POS view and by
//! POS-sequence constraints.
//!
//! Phrases are tagged in isolation, without the surrounding document.

mod lexicon;
mod perceptron;
mod rules;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use lexicon::PosLexicon;
pub use perceptron::{load_tagged_corpus, ModelError, PerceptronTagger, TaggedPhrase};
pub use rules::RuleTagger;

use crate::matching::{sequence_matches, MatchMode};

/// The 17-tag universal coarse tagset (with `CONJ` for coordinating
/// conjunctions).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Adp,
    Pron,
    Det,
    Aux,
    Num,
    Conj,
    Sconj,
    Part,
    Propn,
    Intj,
    Punct,
    Sym,
    X,
}

impl PosTag {
    pub const ALL: [PosTag; 17] = [
        PosTag::Noun,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Adp,
        PosTag::Pron,
        PosTag::Det,
        PosTag::Aux,
        PosTag::Num,
        PosTag::Conj,
        PosTag::Sconj,
        PosTag::Part,
        PosTag::Propn,
        PosTag::Intj,
        PosTag::Punct,
        PosTag::Sym,
        PosTag::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Adp => "ADP",
            PosTag::Pron => "PRON",
            PosTag::Det => "DET",
            PosTag::Aux => "AUX",
            PosTag::Num => "NUM",
            PosTag::Conj => "CONJ",
            PosTag::Sconj => "SCONJ",
            PosTag::Part => "PART",
            PosTag::Propn => "PROPN",
            PosTag::Intj => "INTJ",
            PosTag::Punct => "PUNCT",
            PosTag::Sym => "SYM",
            PosTag::X => "X",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lower-case English name used in prompt clauses.
    pub fn describe(self) -> &'static str {
        match self {
            PosTag::Noun => "noun",
            PosTag::Verb => "verb",
            PosTag::Adj => "adjective",
            PosTag::Adv => "adverb",
            PosTag::Adp => "preposition",
            PosTag::Pron => "pronoun",
            PosTag::Det => "determiner",
            PosTag::Aux => "auxiliary verb",
            PosTag::Num => "number",
            PosTag::Conj => "conjunction",
            PosTag::Sconj => "subordinating conjunction",
            PosTag::Part => "particle",
            PosTag::Propn => "proper noun",
            PosTag::Intj => "interjection",
            PosTag::Punct => "punctuation mark",
            PosTag::Sym => "symbol",
            PosTag::X => "other word",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        match upper.as_str() {
            "CCONJ" => return Ok(PosTag::Conj),
            "ADPOSITION" | "PREP" => return Ok(PosTag::Adp),
            _ => {}
        }
        PosTag::ALL
            .into_iter()
            .find(|t| t.as_str() == upper)
            .ok_or_else(|| format!("unknown POS tag {s:?}"))
    }
}

/// Parses a space- or comma-separated tag list such as `"VERB ADV"`.
pub fn parse_tags(s: &str) -> Result<Vec<PosTag>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

/// A part-of-speech tagger. Implementations are total: unknown words get
/// [`PosTag::X`] rather than an error.
pub trait Tagger: Send + Sync {
    /// One tag per input word.
    fn tag_words(&self, words: &[&str]) -> Vec<PosTag>;

    /// Tags each whitespace-delimited word of `phrase`.
    fn tag_phrase(&self, phrase: &str) -> Vec<(String, PosTag)> {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        let tags = self.tag_words(&words);
        words.into_iter().map(str::to_owned).zip(tags).collect()
    }
}

/// `pattern` must be non-empty; an empty pattern never matches.
pub fn tag_sequence_matches(tags: &[PosTag], pattern: &[PosTag], mode: MatchMode) -> bool {
    sequence_matches(tags, pattern, mode)
}

/// Strips leading/trailing punctuation for lexical lookup.
pub(crate) fn normalize_word(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
        .to_lowercase()
}

pub(crate) fn is_punct(word: &str) -> bool {
    !word.is_empty() && !word.chars().any(char::is_alphanumeric)
}

const BUNDLED_LEXICON: &str = include_str!("../../data/pos-lexicon.tsv");
const BUNDLED_MODEL: &str = include_str!("../../data/pos-model.txt");

/// The lexicon shipped with the crate.
pub fn bundled_lexicon() -> Arc<PosLexicon> {
    static LEX: OnceLock<Arc<PosLexicon>> = OnceLock::new();
    LEX.get_or_init(|| Arc::new(PosLexicon::parse(BUNDLED_LEXICON)))
        .clone()
}

/// The default tagger: the shipped perceptron weights, or the rule-based
/// tagger if the weights cannot be read.
pub fn default_tagger() -> Arc<dyn Tagger> {
    static TAGGER: OnceLock<Arc<dyn Tagger>> = OnceLock::new();
    TAGGER
        .get_or_init(|| match PerceptronTagger::from_model_str(BUNDLED_MODEL, bundled_lexicon()) {
            Ok(t) => Arc::new(t),
            Err(e) => {
                log::warn!("bundled POS model unusable ({e}); using rule-based tagger");
                Arc::new(RuleTagger::new(bundled_lexicon()))
            }
        })
        .clone()
}

/// Loads a tagger from a weights file, falling back to rules when `path`
/// is `None`.
pub fn tagger_from_path(path: Option<&std::path::Path>) -> Result<Arc<dyn Tagger>, ModelError> {
    match path {
        None => Ok(Arc::new(RuleTagger::new(bundled_lexicon()))),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(Arc::new(PerceptronTagger::from_model_str(&text, bundled_lexicon())?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_names_round_trip() {
        for tag in PosTag::ALL {
            assert_eq!(tag.as_str().parse::<PosTag>(), Ok(tag));
            let json = serde_json::to_string(&tag).unwrap();
            assert_eq!(json, format!("\"{}\"", tag.as_str()));
        }
        assert_eq!("cconj".parse::<PosTag>(), Ok(PosTag::Conj));
        assert_eq!(parse_tags("VERB ADV").unwrap(), vec![PosTag::Verb, PosTag::Adv]);
        assert!(parse_tags("VERB FOO").is_err());
    }

    #[test]
    fn default_tagger_handles_figure_phrase() {
        let tagged = default_tagger().tag_phrase("plasticized onto");
        assert_eq!(
            tagged,
            vec![
                ("plasticized".to_owned(), PosTag::Verb),
                ("onto".to_owned(), PosTag::Adp)
            ]
        );
        assert!(default_tagger().tag_phrase("").is_empty());
        assert!(default_tagger().tag_phrase("   ").is_empty());
    }

    #[test]
    fn verb_adverb_matching() {
        use MatchMode::*;
        let tags = [PosTag::Verb, PosTag::Adp];
        assert!(tag_sequence_matches(&tags, &[PosTag::Verb], StartsWith));
        let tags = [PosTag::Verb, PosTag::Noun, PosTag::Adv];
        assert!(tag_sequence_matches(&tags, &[PosTag::Verb, PosTag::Adv], InOrder));
        assert!(!tag_sequence_matches(&tags, &[PosTag::Verb, PosTag::Adv], Contains));
        assert!(!tag_sequence_matches(
            &[PosTag::Noun],
            &[PosTag::Verb, PosTag::Noun],
            Exact
        ));
    }
}
