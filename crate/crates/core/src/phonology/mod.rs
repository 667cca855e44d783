//! Pronunciations and sound matching: CMU-format lexicon lookup with a
//! rule-based grapheme-to-phoneme fallback, syllable counts, and phoneme
//! sequence constraints.

mod g2p;
mod lexicon;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use g2p::grapheme_to_phoneme;
pub use lexicon::{Lexicon, LexiconError};

use crate::matching::{sequence_matches, MatchMode};

/// The 39 ARPAbet phonemes used by CMU-format lexicons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    AA, AE, AH, AO, AW, AY, EH, ER, EY, IH, IY, OW, OY, UH, UW,
    B, CH, D, DH, F, G, HH, JH, K, L, M, N, NG, P, R, S, SH, T, TH, V, W, Y, Z, ZH,
}

impl Symbol {
    pub const ALL: [Symbol; 39] = {
        use Symbol::*;
        [
            AA, AE, AH, AO, AW, AY, EH, ER, EY, IH, IY, OW, OY, UH, UW, B, CH, D, DH, F, G, HH,
            JH, K, L, M, N, NG, P, R, S, SH, T, TH, V, W, Y, Z, ZH,
        ]
    };

    pub fn is_vowel(self) -> bool {
        (self as usize) < 15
    }

    pub fn as_str(self) -> &'static str {
        use Symbol::*;
        match self {
            AA => "AA", AE => "AE", AH => "AH", AO => "AO", AW => "AW", AY => "AY",
            EH => "EH", ER => "ER", EY => "EY", IH => "IH", IY => "IY", OW => "OW",
            OY => "OY", UH => "UH", UW => "UW", B => "B", CH => "CH", D => "D",
            DH => "DH", F => "F", G => "G", HH => "HH", JH => "JH", K => "K", L => "L",
            M => "M", N => "N", NG => "NG", P => "P", R => "R", S => "S", SH => "SH",
            T => "T", TH => "TH", V => "V", W => "W", Y => "Y", Z => "Z", ZH => "ZH",
        }
    }
}

impl FromStr for Symbol {
    type Err = PhonologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symbol::ALL
            .into_iter()
            .find(|sym| sym.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| PhonologyError::BadPhoneme(s.to_owned()))
    }
}

/// A phoneme with optional lexical stress (vowels only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phoneme {
    pub symbol: Symbol,
    pub stress: Option<u8>,
}

impl Phoneme {
    pub fn new(symbol: Symbol, stress: Option<u8>) -> Self {
        let stress = if symbol.is_vowel() { Some(stress.unwrap_or(0)) } else { None };
        Self { symbol, stress }
    }

    pub fn is_vowel(&self) -> bool {
        self.symbol.is_vowel()
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stress {
            Some(s) => write!(f, "{}{}", self.symbol.as_str(), s),
            None => f.write_str(self.symbol.as_str()),
        }
    }
}

impl FromStr for Phoneme {
    type Err = PhonologyError;

    /// Accepts `EY1`, `EY` (stress unknown) and `K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (body, stress) = match s.char_indices().last() {
            Some((i, c)) if c.is_ascii_digit() => {
                let d = c.to_digit(10).unwrap() as u8;
                if d > 2 {
                    return Err(PhonologyError::BadPhoneme(s.to_owned()));
                }
                (&s[..i], Some(d))
            }
            _ => (s, None),
        };
        let symbol: Symbol = body.parse()?;
        if stress.is_some() && !symbol.is_vowel() {
            return Err(PhonologyError::BadPhoneme(s.to_owned()));
        }
        Ok(Phoneme {
            symbol,
            stress: if symbol.is_vowel() { stress } else { None },
        })
    }
}

impl Serialize for Phoneme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Phoneme {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a space-separated phoneme string such as `"K AE P"`.
pub fn parse_phonemes(s: &str) -> Result<Vec<Phoneme>, PhonologyError> {
    s.split_whitespace().map(str::parse).collect()
}

/// Renders phonemes without stress digits, e.g. `K AE P T IH V EY T IH NG`.
pub fn render_plain(phonemes: &[Phoneme]) -> String {
    phonemes
        .iter()
        .map(|p| p.symbol.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PhonologyError {
    #[error("{0:?} has no letters to pronounce")]
    Unpronounceable(String),
    #[error("{0:?} is not an ARPAbet phoneme")]
    BadPhoneme(String),
    #[error("a sound reference needs at least one phoneme")]
    EmptyReference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PronunciationSource {
    Lexicon,
    G2p,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pronunciation {
    pub word: String,
    pub phonemes: Vec<Phoneme>,
    pub source: PronunciationSource,
}

impl Pronunciation {
    pub fn syllable_count(&self) -> usize {
        syllable_count(&self.phonemes)
    }
}

pub fn syllable_count(phonemes: &[Phoneme]) -> usize {
    phonemes.iter().filter(|p| p.is_vowel()).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SoundMode {
    StartsWith,
    EndsWith,
    Contains,
    RhymesWith,
}

impl SoundMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SoundMode::StartsWith => "startsWith",
            SoundMode::EndsWith => "endsWith",
            SoundMode::Contains => "contains",
            SoundMode::RhymesWith => "rhymesWith",
        }
    }
}

impl FromStr for SoundMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "startswith" | "starts" => Ok(SoundMode::StartsWith),
            "endswith" | "ends" => Ok(SoundMode::EndsWith),
            "contains" => Ok(SoundMode::Contains),
            "rhymeswith" | "rhymes" | "rhyme" => Ok(SoundMode::RhymesWith),
            _ => Err(format!("unknown sound mode {s:?}")),
        }
    }
}

/// Reference pronunciation plus how phrases must relate to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundRef {
    pub phonemes: Vec<Phoneme>,
    pub mode: SoundMode,
}

impl SoundRef {
    pub fn new(phonemes: Vec<Phoneme>, mode: SoundMode) -> Result<Self, PhonologyError> {
        if phonemes.is_empty() {
            return Err(PhonologyError::EmptyReference);
        }
        Ok(Self { phonemes, mode })
    }
}

/// The part of `phonemes` that must be shared for a perfect rhyme: from the
/// last primary-stressed vowel to the end. Falls back to the last
/// secondary-stressed vowel, then to the last vowel, then to the whole
/// sequence when there are no vowels.
pub fn rhyme_suffix(phonemes: &[Phoneme]) -> &[Phoneme] {
    let last_with = |pred: &dyn Fn(&Phoneme) -> bool| phonemes.iter().rposition(|p| pred(p));
    let idx = last_with(&|p| p.stress == Some(1))
        .or_else(|| last_with(&|p| p.stress == Some(2)))
        .or_else(|| last_with(&|p| p.is_vowel()))
        .unwrap_or(0);
    &phonemes[idx..]
}

/// Lexicon-backed pronouncer.
#[derive(Clone, Debug)]
pub struct Phonology {
    lexicon: Arc<Lexicon>,
}

const BUNDLED_LEXICON: &str = include_str!("../../data/cmudict-subset.dict");

impl Phonology {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        Self { lexicon }
    }

    /// Phonology over the bundled lexicon subset.
    pub fn bundled() -> Self {
        static LEX: OnceLock<Arc<Lexicon>> = OnceLock::new();
        let lex = LEX
            .get_or_init(|| Arc::new(Lexicon::parse(BUNDLED_LEXICON).expect("bundled lexicon parses")))
            .clone();
        Self::new(lex)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, LexiconError> {
        Ok(Self::new(Arc::new(Lexicon::load(path)?)))
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// First lexicon variant when present, otherwise the G2P fallback.
    pub fn pronounce(&self, word: &str) -> Result<Pronunciation, PhonologyError> {
        let key: String = word
            .chars()
            .filter(|c| c.is_alphanumeric() || *c == '\'' || *c == '-')
            .collect::<String>()
            .to_lowercase();
        if !key.chars().any(char::is_alphabetic) {
            return Err(PhonologyError::Unpronounceable(word.to_owned()));
        }
        if let Some(first) = self.lexicon.variants(&key).and_then(|v| v.first()) {
            return Ok(Pronunciation {
                word: key,
                phonemes: first.clone(),
                source: PronunciationSource::Lexicon,
            });
        }
        let phonemes = grapheme_to_phoneme(&key);
        Ok(Pronunciation {
            word: key,
            phonemes,
            source: PronunciationSource::G2p,
        })
    }

    /// Alternate lexicon pronunciations beyond the first.
    pub fn alternates(&self, word: &str) -> Vec<Vec<Phoneme>> {
        self.lexicon
            .variants(&word.to_lowercase())
            .map(|v| v.iter().skip(1).cloned().collect())
            .unwrap_or_default()
    }

    /// Pronunciations of each word of `phrase`; tokens without letters
    /// (punctuation, digits) are skipped.
    pub fn pronounce_words(&self, phrase: &str) -> Vec<Pronunciation> {
        phrase
            .split(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '\'' && c != '-'))
            .filter_map(|w| self.pronounce(w).ok())
            .collect()
    }

    /// Concatenated phrase pronunciation without pauses.
    pub fn pronounce_phrase(&self, phrase: &str) -> Result<Vec<Phoneme>, PhonologyError> {
        let out: Vec<Phoneme> = self
            .pronounce_words(phrase)
            .into_iter()
            .flat_map(|p| p.phonemes)
            .collect();
        if out.is_empty() {
            return Err(PhonologyError::Unpronounceable(phrase.to_owned()));
        }
        Ok(out)
    }

    /// 1.0 when `phrase` satisfies `reference`, else 0.0.
    pub fn match_sound(&self, phrase: &str, reference: &SoundRef) -> Result<f64, PhonologyError> {
        let phonemes = self.pronounce_phrase(phrase)?;
        Ok(if sound_matches(&phonemes, reference) { 1.0 } else { 0.0 })
    }
}

/// Stress-insensitive comparison. Two pronunciations rhyme when their rhyme
/// suffixes, located by stress, have the same symbols.
pub fn sound_matches(phonemes: &[Phoneme], reference: &SoundRef) -> bool {
    let plain = |ps: &[Phoneme]| -> Vec<Symbol> { ps.iter().map(|p| p.symbol).collect() };
    let have = plain(phonemes);
    let target = plain(&reference.phonemes);
    match reference.mode {
        SoundMode::StartsWith => sequence_matches(&have, &target, MatchMode::StartsWith),
        SoundMode::EndsWith => sequence_matches(&have, &target, MatchMode::EndsWith),
        SoundMode::Contains => sequence_matches(&have, &target, MatchMode::Contains),
        SoundMode::RhymesWith => {
            !phonemes.is_empty() && plain(rhyme_suffix(phonemes)) == plain(rhyme_suffix(&reference.phonemes))
        }
    }
}
