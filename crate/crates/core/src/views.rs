//! Token-level view annotation of rephrasings: POS tags, log-probabilities
//! and phonemes.

use crate::lm::{LmError, LogitBackend, TokenId};
use crate::model::Rephrasing;
use crate::phonology::Phonology;
use crate::pos::Tagger;

/// Tags every word token, tagging the phrase in isolation.
pub fn annotate_pos(r: &mut Rephrasing, tagger: &dyn Tagger) {
    let words: Vec<String> = r.words().map(|t| t.surface.clone()).collect();
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    let mut tags = tagger.tag_words(&refs).into_iter();
    for t in r.tokens.iter_mut().filter(|t| t.is_word()) {
        t.pos = tags.next();
    }
}

/// Attaches a pronunciation to every word token. Words without letters get
/// an empty pronunciation.
pub fn annotate_phonemes(r: &mut Rephrasing, phonology: &Phonology) {
    for t in r.tokens.iter_mut().filter(|t| t.is_word()) {
        t.phonemes = Some(
            phonology
                .pronounce(&t.surface)
                .map(|p| p.phonemes)
                .unwrap_or_default(),
        );
    }
}

/// Distributes language-model token log-probabilities over the surface
/// tokens of `r`. `pieces` are the model tokens of `r.text`, possibly with
/// extra leading or trailing whitespace. Each piece is credited to the
/// surface token holding its first non-space character (pure whitespace
/// pieces to the token at their start), so surface log-probabilities sum to
/// the phrase total, which is stored in `total_log_prob`.
pub fn attach_log_probs(r: &mut Rephrasing, pieces: &[(String, f64)]) {
    let full: String = pieces.iter().map(|(s, _)| s.as_str()).collect();
    let lead = full.chars().count() - full.trim_start().chars().count();
    // surface token index for each character of r.text
    let mut owner: Vec<usize> = Vec::new();
    for (i, t) in r.tokens.iter().enumerate() {
        owner.extend(std::iter::repeat_n(i, t.surface.chars().count()));
    }
    for t in r.tokens.iter_mut() {
        t.log_prob = None;
    }
    if owner.is_empty() {
        return;
    }
    let mut pos = 0usize;
    let mut total = 0.0;
    for (surface, lp) in pieces {
        let offset = surface
            .chars()
            .position(|c| !c.is_whitespace())
            .unwrap_or(0);
        let at = (pos + offset).saturating_sub(lead).min(owner.len() - 1);
        let slot = &mut r.tokens[owner[at]].log_prob;
        *slot = Some(slot.unwrap_or(0.0) + lp);
        total += lp;
        pos += surface.chars().count();
    }
    r.total_log_prob = Some(total.min(0.0));
}

/// Splits text before an inlet into the part the model is conditioned on
/// and the trailing whitespace, which belongs to whatever follows so that
/// leading-space tokens line up.
pub fn split_context(before: &str) -> (&str, &str) {
    let head = before.trim_end();
    (head, &before[head.len()..])
}

/// Scores `lead` followed by `r.text` after `context` with the logit backend
/// and attaches the per-token and total log-probabilities.
pub fn annotate_log_probs(
    r: &mut Rephrasing,
    backend: &dyn LogitBackend,
    context: &[TokenId],
    lead: &str,
) -> Result<(), LmError> {
    let tokens = backend.tokenize(&format!("{lead}{}", r.text))?;
    let ids: Vec<TokenId> = tokens.iter().map(|t| t.id).collect();
    let lps = backend.token_log_probs(context, &ids)?;
    let pieces: Vec<(String, f64)> = tokens.into_iter().map(|t| t.surface).zip(lps).collect();
    attach_log_probs(r, &pieces);
    Ok(())
}
