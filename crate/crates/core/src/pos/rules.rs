use std::sync::Arc;

use super::{is_punct, normalize_word, PosLexicon, PosTag, Tagger};

/// Lexicon lookup with suffix heuristics for unknown words and a couple of
/// local context repairs. Used when no perceptron weights are configured.
#[derive(Clone, Debug)]
pub struct RuleTagger {
    lexicon: Arc<PosLexicon>,
}

impl RuleTagger {
    pub fn new(lexicon: Arc<PosLexicon>) -> Self {
        Self { lexicon }
    }

    fn initial(&self, word: &str) -> PosTag {
        if is_punct(word) {
            return PosTag::Punct;
        }
        let norm = normalize_word(word);
        if let Some(tag) = self.lexicon.get(&norm) {
            return tag;
        }
        suffix_guess(word, &norm)
    }
}

/// Guess for a word missing from the lexicon. Falls back to `X`.
pub(crate) fn suffix_guess(raw: &str, norm: &str) -> PosTag {
    if norm.is_empty() {
        return PosTag::X;
    }
    if norm.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return PosTag::Num;
    }
    const RULES: &[(&str, PosTag)] = &[
        ("ly", PosTag::Adv),
        ("ing", PosTag::Verb),
        ("ed", PosTag::Verb),
        ("ize", PosTag::Verb),
        ("ise", PosTag::Verb),
        ("ify", PosTag::Verb),
        ("ate", PosTag::Verb),
        ("tion", PosTag::Noun),
        ("sion", PosTag::Noun),
        ("ness", PosTag::Noun),
        ("ment", PosTag::Noun),
        ("ity", PosTag::Noun),
        ("ship", PosTag::Noun),
        ("ism", PosTag::Noun),
        ("ist", PosTag::Noun),
        ("er", PosTag::Noun),
        ("ous", PosTag::Adj),
        ("ful", PosTag::Adj),
        ("less", PosTag::Adj),
        ("able", PosTag::Adj),
        ("ible", PosTag::Adj),
        ("ive", PosTag::Adj),
        ("al", PosTag::Adj),
        ("ic", PosTag::Adj),
        ("ish", PosTag::Adj),
        ("y", PosTag::Adj),
        ("s", PosTag::Noun),
    ];
    if raw.chars().next().is_some_and(char::is_uppercase) {
        return PosTag::Propn;
    }
    for (suffix, tag) in RULES {
        if norm.len() > suffix.len() + 2 && norm.ends_with(suffix) {
            return *tag;
        }
    }
    PosTag::X
}

impl Tagger for RuleTagger {
    fn tag_words(&self, words: &[&str]) -> Vec<PosTag> {
        let mut tags: Vec<PosTag> = words.iter().map(|w| self.initial(w)).collect();
        for i in 1..tags.len() {
            let prev = tags[i - 1];
            let prev_word = normalize_word(words[i - 1]);
            tags[i] = match (prev, tags[i]) {
                (PosTag::Det | PosTag::Adj, PosTag::Verb) if !words[i].ends_with("ing") => {
                    PosTag::Noun
                }
                (PosTag::Aux, PosTag::Noun) => PosTag::Verb,
                (PosTag::Part, PosTag::Noun) if prev_word == "to" => PosTag::Verb,
                (PosTag::Pron, PosTag::Noun) if is_subject_pronoun(&prev_word) => PosTag::Verb,
                (_, t) => t,
            };
        }
        tags
    }
}

fn is_subject_pronoun(w: &str) -> bool {
    matches!(w, "i" | "you" | "he" | "she" | "it" | "we" | "they")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pos::bundled_lexicon;

    #[test]
    fn unknown_words_never_fail() {
        let t = RuleTagger::new(bundled_lexicon());
        let tags = t.tag_words(&["zzzpt", "Qwerty", "quibblingly", "!"]);
        assert_eq!(tags, vec![PosTag::X, PosTag::Propn, PosTag::Adv, PosTag::Punct]);
    }

    #[test]
    fn context_repairs() {
        let t = RuleTagger::new(bundled_lexicon());
        assert_eq!(t.tag_words(&["they", "light"])[1], PosTag::Verb);
        assert_eq!(t.tag_words(&["to", "light"])[1], PosTag::Verb);
        assert_eq!(t.tag_words(&["the", "walk"])[1], PosTag::Noun);
    }
}
