use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Token id. Ids `0..vocab.len()` are vocabulary entries; `vocab.len()` is
/// the shared id for out-of-vocabulary pieces.
pub type TokenId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub id: TokenId,
    pub surface: String,
}

/// Surface-string vocabulary with greedy longest-match tokenization.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    surfaces: Vec<String>,
    index: HashMap<String, TokenId>,
    max_chars: usize,
}

impl Vocab {
    /// Builds a vocabulary; later duplicates keep the first id. Empty
    /// surfaces are ignored for matching.
    pub fn new(surfaces: Vec<String>) -> Self {
        let mut index = HashMap::new();
        let mut max_chars = 0;
        for (i, s) in surfaces.iter().enumerate() {
            if s.is_empty() {
                continue;
            }
            index.entry(s.clone()).or_insert(i as TokenId);
            max_chars = max_chars.max(s.chars().count());
        }
        Self { surfaces, index, max_chars }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn unknown_id(&self) -> TokenId {
        self.surfaces.len() as TokenId
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.surfaces.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    /// Greedy longest match against the vocabulary. Text no entry covers is
    /// split into runs of letters/digits, runs of whitespace, or single
    /// other characters, each with the unknown id, so surfaces always
    /// concatenate back to `text`.
    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let byte_at = |i: usize| chars.get(i).map_or(text.len(), |c| c.0);
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let longest = (1..=self.max_chars.min(chars.len() - i)).rev().find_map(|n| {
                let piece = &text[byte_at(i)..byte_at(i + n)];
                self.index.get(piece).map(|&id| (n, id))
            });
            if let Some((n, id)) = longest {
                out.push(Token {
                    id,
                    surface: text[byte_at(i)..byte_at(i + n)].to_owned(),
                });
                i += n;
                continue;
            }
            let class = char_class(chars[i].1);
            let mut j = i + 1;
            if class != CharClass::Other {
                while j < chars.len()
                    && char_class(chars[j].1) == class
                    && !self.starts_known(&text[byte_at(j)..])
                {
                    j += 1;
                }
            }
            out.push(Token {
                id: self.unknown_id(),
                surface: text[byte_at(i)..byte_at(j)].to_owned(),
            });
            i = j;
        }
        out
    }

    fn starts_known(&self, rest: &str) -> bool {
        let mut end = 0;
        for (n, c) in rest.chars().enumerate() {
            if n >= self.max_chars {
                break;
            }
            end += c.len_utf8();
            if self.index.contains_key(&rest[..end]) {
                return true;
            }
        }
        false
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Word,
    Space,
    Other,
}

fn char_class(c: char) -> CharClass {
    if c.is_alphanumeric() {
        CharClass::Word
    } else if c.is_whitespace() {
        CharClass::Space
    } else {
        CharClass::Other
    }
}

pub fn detokenize(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect()
}
