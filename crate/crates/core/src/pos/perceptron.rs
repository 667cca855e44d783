//! Averaged perceptron tagger with greedy left-to-right decoding.
//!
//! Weights are stored as a small text header followed by JSON:
//!
//! ```text
//! PHRASELETTE-POS-PERCEPTRON 1
//! {"tags":[...],"weights":{"feature":{"NOUN":0.5,...},...}}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rules::suffix_guess;
use super::{is_punct, normalize_word, PosLexicon, PosTag, Tagger};

const MAGIC: &str = "PHRASELETTE-POS-PERCEPTRON";
const FORMAT_VERSION: u32 = 1;
const NTAGS: usize = PosTag::ALL.len();

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("not a POS model file (missing {MAGIC} header)")]
    BadMagic,
    #[error("unsupported POS model version {0}")]
    Version(u32),
    #[error("malformed POS model: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed training line {line}: {reason}")]
    Corpus { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One training or evaluation phrase.
pub type TaggedPhrase = Vec<(String, PosTag)>;

/// Reads `word/TAG word/TAG ...` lines; `#` lines and blanks are skipped.
pub fn load_tagged_corpus(text: &str) -> Result<Vec<TaggedPhrase>, ModelError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut phrase = Vec::new();
        for item in line.split_whitespace() {
            let (word, tag) = item.rsplit_once('/').ok_or_else(|| ModelError::Corpus {
                line: n + 1,
                reason: format!("{item:?} has no /TAG"),
            })?;
            let tag = tag.parse::<PosTag>().map_err(|reason| ModelError::Corpus {
                line: n + 1,
                reason,
            })?;
            phrase.push((word.to_owned(), tag));
        }
        out.push(phrase);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    tags: Vec<PosTag>,
    weights: BTreeMap<String, BTreeMap<PosTag, f64>>,
}

#[derive(Clone, Debug)]
pub struct PerceptronTagger {
    weights: HashMap<String, [f64; NTAGS]>,
    lexicon: Arc<PosLexicon>,
}

impl PerceptronTagger {
    pub fn from_model_str(text: &str, lexicon: Arc<PosLexicon>) -> Result<Self, ModelError> {
        let (header, body) = text.split_once('\n').ok_or(ModelError::BadMagic)?;
        let mut head = header.split_whitespace();
        if head.next() != Some(MAGIC) {
            return Err(ModelError::BadMagic);
        }
        let version: u32 = head.next().and_then(|v| v.parse().ok()).unwrap_or(0);
        if version != FORMAT_VERSION {
            return Err(ModelError::Version(version));
        }
        let file: ModelFile = serde_json::from_str(body)?;
        let weights = file
            .weights
            .into_iter()
            .map(|(feat, per_tag)| {
                let mut row = [0.0; NTAGS];
                for (tag, w) in per_tag {
                    row[tag.index()] = w;
                }
                (feat, row)
            })
            .collect();
        Ok(Self { weights, lexicon })
    }

    /// Serializes the weights, dropping near-zero entries and rounding to
    /// three decimals.
    pub fn to_model_string(&self) -> String {
        let mut weights = BTreeMap::new();
        for (feat, row) in &self.weights {
            let per_tag: BTreeMap<PosTag, f64> = PosTag::ALL
                .iter()
                .filter_map(|&t| {
                    let w = (row[t.index()] * 1000.0).round() / 1000.0;
                    (w != 0.0).then_some((t, w))
                })
                .collect();
            if !per_tag.is_empty() {
                weights.insert(feat.clone(), per_tag);
            }
        }
        let file = ModelFile {
            tags: PosTag::ALL.to_vec(),
            weights,
        };
        format!(
            "{MAGIC} {FORMAT_VERSION}\n{}\n",
            serde_json::to_string(&file).expect("model serializes")
        )
    }

    /// Trains on `corpus` for `iterations` epochs, shuffling with `seed`.
    pub fn train(
        corpus: &[TaggedPhrase],
        lexicon: Arc<PosLexicon>,
        iterations: usize,
        seed: u64,
    ) -> Self {
        let mut trainer = Trainer::default();
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self {
            weights: HashMap::new(),
            lexicon,
        };
        for _ in 0..iterations {
            order.shuffle(&mut rng);
            for &idx in &order {
                let phrase = &corpus[idx];
                let words: Vec<&str> = phrase.iter().map(|(w, _)| w.as_str()).collect();
                let ctx = Context::new(&words, &model.lexicon);
                let mut prev = START;
                let mut prev2 = START;
                for (i, (_, truth)) in phrase.iter().enumerate() {
                    let feats = ctx.features(i, prev, prev2);
                    let guess = trainer.predict(&feats);
                    trainer.update(*truth, guess, &feats);
                    prev2 = prev;
                    prev = truth.as_str();
                }
            }
        }
        model.weights = trainer.averaged();
        model
    }

    fn predict(&self, feats: &[String]) -> PosTag {
        let mut scores = [0.0f64; NTAGS];
        for f in feats {
            if let Some(row) = self.weights.get(f) {
                for (s, w) in scores.iter_mut().zip(row) {
                    *s += w;
                }
            }
        }
        argmax(&scores)
    }
}

impl Tagger for PerceptronTagger {
    fn tag_words(&self, words: &[&str]) -> Vec<PosTag> {
        let ctx = Context::new(words, &self.lexicon);
        let mut out = Vec::with_capacity(words.len());
        let mut prev = START;
        let mut prev2 = START;
        for (i, word) in words.iter().enumerate() {
            let tag = if is_punct(word) {
                PosTag::Punct
            } else {
                self.predict(&ctx.features(i, prev, prev2))
            };
            out.push(tag);
            prev2 = prev;
            prev = tag.as_str();
        }
        out
    }
}

const START: &str = "-START-";

fn argmax(scores: &[f64; NTAGS]) -> PosTag {
    let mut best = 0;
    for i in 1..NTAGS {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    PosTag::ALL[best]
}

struct Context {
    norm: Vec<String>,
    lex: Vec<&'static str>,
    shapes: Vec<&'static str>,
}

impl Context {
    fn new(words: &[&str], lexicon: &PosLexicon) -> Self {
        let norm: Vec<String> = words.iter().map(|w| normalize_word(w)).collect();
        let lex = words
            .iter()
            .zip(&norm)
            .map(|(raw, n)| match lexicon.get(n) {
                Some(t) => t.as_str(),
                None if is_punct(raw) => "PUNCT",
                None => match suffix_guess(raw, n) {
                    PosTag::X => "UNK",
                    t => lex_guess_name(t),
                },
            })
            .collect();
        let shapes = words.iter().map(|w| shape(w)).collect();
        Self { norm, lex, shapes }
    }

    fn features(&self, i: usize, prev: &str, prev2: &str) -> Vec<String> {
        let w = &self.norm[i];
        let n = self.norm.len();
        let suffix = |k: usize| -> String {
            let chars: Vec<char> = w.chars().collect();
            chars[chars.len().saturating_sub(k)..].iter().collect()
        };
        let prefix: String = w.chars().take(1).collect();
        let prev_word = if i > 0 { self.norm[i - 1].as_str() } else { START };
        let next_word = if i + 1 < n { self.norm[i + 1].as_str() } else { "-END-" };
        let next_lex = if i + 1 < n { self.lex[i + 1] } else { "-END-" };
        let next2_lex = if i + 2 < n { self.lex[i + 2] } else { "-END-" };
        let position = match (i == 0, i + 1 == n) {
            (true, true) => "only",
            (true, false) => "first",
            (false, true) => "last",
            (false, false) => "mid",
        };
        vec![
            "bias".to_owned(),
            format!("w={w}"),
            format!("suf3={}", suffix(3)),
            format!("suf2={}", suffix(2)),
            format!("pre1={prefix}"),
            format!("shape={}", self.shapes[i]),
            format!("lex={}", self.lex[i]),
            format!("pos={position}"),
            format!("p1={prev}"),
            format!("p12={prev2}+{prev}"),
            format!("p1lex={prev}+{}", self.lex[i]),
            format!("w-1={prev_word}"),
            format!("w+1={next_word}"),
            format!("lex+1={next_lex}"),
            format!("lex+1+2={next_lex}+{next2_lex}"),
            format!("lexnext={}+{next_lex}", self.lex[i]),
            format!("p1lexnext={prev}+{}+{next_lex}", self.lex[i]),
        ]
    }
}

fn lex_guess_name(t: PosTag) -> &'static str {
    match t {
        PosTag::Noun => "GUESS-NOUN",
        PosTag::Verb => "GUESS-VERB",
        PosTag::Adj => "GUESS-ADJ",
        PosTag::Adv => "GUESS-ADV",
        PosTag::Propn => "GUESS-PROPN",
        PosTag::Num => "GUESS-NUM",
        _ => "UNK",
    }
}

fn shape(word: &str) -> &'static str {
    if word.chars().any(|c| c.is_ascii_digit()) {
        "digit"
    } else if word.contains('-') {
        "hyphen"
    } else if word.chars().next().is_some_and(char::is_uppercase) {
        "cap"
    } else {
        "lower"
    }
}

/// Accumulators for weight averaging.
#[derive(Default)]
struct Trainer {
    weights: HashMap<String, [f64; NTAGS]>,
    totals: HashMap<String, [f64; NTAGS]>,
    stamps: HashMap<String, [u64; NTAGS]>,
    instances: u64,
}

impl Trainer {
    fn predict(&self, feats: &[String]) -> PosTag {
        let mut scores = [0.0f64; NTAGS];
        for f in feats {
            if let Some(row) = self.weights.get(f) {
                for (s, w) in scores.iter_mut().zip(row) {
                    *s += w;
                }
            }
        }
        argmax(&scores)
    }

    fn update(&mut self, truth: PosTag, guess: PosTag, feats: &[String]) {
        self.instances += 1;
        if truth == guess {
            return;
        }
        for f in feats {
            self.bump(f, truth.index(), 1.0);
            self.bump(f, guess.index(), -1.0);
        }
    }

    fn bump(&mut self, feat: &str, class: usize, delta: f64) {
        let w = self.weights.entry(feat.to_owned()).or_insert([0.0; NTAGS]);
        let totals = self.totals.entry(feat.to_owned()).or_insert([0.0; NTAGS]);
        let stamps = self.stamps.entry(feat.to_owned()).or_insert([0; NTAGS]);
        totals[class] += (self.instances - stamps[class]) as f64 * w[class];
        stamps[class] = self.instances;
        w[class] += delta;
    }

    fn averaged(mut self) -> HashMap<String, [f64; NTAGS]> {
        let n = self.instances.max(1) as f64;
        let mut out = HashMap::with_capacity(self.weights.len());
        for (feat, w) in self.weights.drain() {
            let totals = &self.totals[&feat];
            let stamps = &self.stamps[&feat];
            let mut row = [0.0; NTAGS];
            for c in 0..NTAGS {
                let total = totals[c] + (self.instances - stamps[c]) as f64 * w[c];
                row[c] = total / n;
            }
            out.insert(feat, row);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pos::bundled_lexicon;

    fn tiny_corpus() -> Vec<TaggedPhrase> {
        load_tagged_corpus(
            "the/DET walk/NOUN\nthey/PRON walk/VERB\nthe/DET light/NOUN\nwe/PRON light/VERB\n\
             a/DET dream/NOUN\nyou/PRON dream/VERB\n",
        )
        .unwrap()
    }

    #[test]
    fn learns_context_disambiguation() {
        let model = PerceptronTagger::train(&tiny_corpus(), bundled_lexicon(), 10, 1);
        assert_eq!(model.tag_words(&["they", "walk"]), vec![PosTag::Pron, PosTag::Verb]);
        assert_eq!(model.tag_words(&["the", "walk"]), vec![PosTag::Det, PosTag::Noun]);
    }

    #[test]
    fn model_file_round_trips() {
        let model = PerceptronTagger::train(&tiny_corpus(), bundled_lexicon(), 5, 7);
        let text = model.to_model_string();
        assert!(text.starts_with(MAGIC));
        let back = PerceptronTagger::from_model_str(&text, bundled_lexicon()).unwrap();
        for phrase in [&["we", "dream"][..], &["a", "light"]] {
            assert_eq!(model.tag_words(phrase), back.tag_words(phrase));
        }
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(matches!(
            PerceptronTagger::from_model_str("{}\n", bundled_lexicon()),
            Err(ModelError::BadMagic)
        ));
        assert!(matches!(
            PerceptronTagger::from_model_str(&format!("{MAGIC} 9\n{{}}"), bundled_lexicon()),
            Err(ModelError::Version(9))
        ));
    }

    #[test]
    fn corpus_errors_name_the_line() {
        let err = load_tagged_corpus("ok/NOUN\nbroken\n").unwrap_err();
        assert!(matches!(err, ModelError::Corpus { line: 2, .. }));
    }
}
