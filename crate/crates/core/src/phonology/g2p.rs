//! Letter-to-sound rules for words missing from the lexicon. Crude but
//! total: every word with at least one letter gets at least one vowel.

use super::{Phoneme, Symbol};

use Symbol::*;

fn is_vowel_letter(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

/// Multi-letter spellings, longest first.
const CLUSTERS: &[(&str, &[Symbol])] = &[
    ("tion", &[SH, AH, N]),
    ("sion", &[ZH, AH, N]),
    ("ough", &[AO]),
    ("augh", &[AO]),
    ("eigh", &[EY]),
    ("igh", &[AY]),
    ("tch", &[CH]),
    ("dge", &[JH]),
    ("sch", &[S, K]),
    ("que", &[K]),
    ("ch", &[CH]),
    ("sh", &[SH]),
    ("th", &[TH]),
    ("ph", &[F]),
    ("wh", &[W]),
    ("ck", &[K]),
    ("ng", &[NG]),
    ("qu", &[K, W]),
    ("kn", &[N]),
    ("wr", &[R]),
    ("gh", &[G]),
    ("ee", &[IY]),
    ("ea", &[IY]),
    ("ie", &[IY]),
    ("ei", &[EY]),
    ("ai", &[EY]),
    ("ay", &[EY]),
    ("oa", &[OW]),
    ("oo", &[UW]),
    ("ou", &[AW]),
    ("ow", &[OW]),
    ("oi", &[OY]),
    ("oy", &[OY]),
    ("au", &[AO]),
    ("aw", &[AO]),
    ("ew", &[UW]),
    ("ue", &[UW]),
    ("ar", &[AA, R]),
    ("er", &[ER]),
    ("ir", &[ER]),
    ("ur", &[ER]),
    ("or", &[AO, R]),
];

fn short_vowel(c: u8) -> Symbol {
    match c {
        b'a' => AE,
        b'e' => EH,
        b'i' => IH,
        b'o' => AA,
        b'u' => AH,
        _ => IH,
    }
}

fn long_vowel(c: u8) -> Symbol {
    match c {
        b'a' => EY,
        b'e' => IY,
        b'i' => AY,
        b'o' => OW,
        b'u' => UW,
        _ => AY,
    }
}

fn consonant(c: u8, next: Option<u8>) -> &'static [Symbol] {
    let soft = matches!(next, Some(b'e' | b'i' | b'y'));
    match c {
        b'b' => &[B],
        b'c' if soft => &[S],
        b'c' => &[K],
        b'd' => &[D],
        b'f' => &[F],
        b'g' if soft => &[JH],
        b'g' => &[G],
        b'h' => &[HH],
        b'j' => &[JH],
        b'k' => &[K],
        b'l' => &[L],
        b'm' => &[M],
        b'n' => &[N],
        b'p' => &[P],
        b'q' => &[K],
        b'r' => &[R],
        b's' => &[S],
        b't' => &[T],
        b'v' => &[V],
        b'w' => &[W],
        b'x' => &[K, S],
        b'z' => &[Z],
        _ => &[],
    }
}

/// Pronounces a lower-case word by rule. Primary stress goes on the first
/// vowel; the rest are unstressed.
pub fn grapheme_to_phoneme(word: &str) -> Vec<Phoneme> {
    let letters: Vec<u8> = word
        .to_ascii_lowercase()
        .bytes()
        .filter(u8::is_ascii_alphabetic)
        .collect();
    let n = letters.len();
    let mut out: Vec<Symbol> = Vec::new();
    let mut i = 0;
    'outer: while i < n {
        let rest = &letters[i..];
        for (spelling, sounds) in CLUSTERS {
            if rest.starts_with(spelling.as_bytes()) {
                // "ng" only as a final cluster; inside words it is N + G.
                if *spelling == "ng" && i + 2 < n && is_vowel_letter(letters[i + 2]) {
                    break;
                }
                out.extend_from_slice(sounds);
                i += spelling.len();
                continue 'outer;
            }
        }
        let c = letters[i];
        let next = letters.get(i + 1).copied();
        if c == b'e' && i + 1 == n && n > 2 && out.iter().any(|s| s.is_vowel()) {
            // silent final e
            i += 1;
            continue;
        }
        if c == b'y' && i == 0 {
            out.push(Y);
        } else if is_vowel_letter(c) {
            // magic e: vowel + single consonant + final e
            let magic = i + 2 == n - 1
                && letters[n - 1] == b'e'
                && next.is_some_and(|x| !is_vowel_letter(x));
            if c == b'y' {
                out.push(if i + 1 == n && n > 2 { IY } else { IH });
            } else if magic || (i + 1 == n && c != b'a') {
                out.push(long_vowel(c));
            } else {
                out.push(short_vowel(c));
            }
        } else if next == Some(c) {
            out.extend_from_slice(consonant(c, letters.get(i + 2).copied()));
            i += 1;
        } else {
            out.extend_from_slice(consonant(c, next));
        }
        i += 1;
    }
    if !out.iter().any(|s| s.is_vowel()) {
        out.insert(if out.is_empty() { 0 } else { 1 }, AH);
    }
    let mut seen_vowel = false;
    out.into_iter()
        .map(|s| {
            if s.is_vowel() {
                let stress = if seen_vowel { 0 } else { 1 };
                seen_vowel = true;
                Phoneme::new(s, Some(stress))
            } else {
                Phoneme::new(s, None)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::render_plain;

    fn g(w: &str) -> String {
        render_plain(&grapheme_to_phoneme(w))
    }

    #[test]
    fn common_patterns() {
        assert_eq!(g("cat"), "K AE T");
        assert_eq!(g("cake"), "K EY K");
        assert_eq!(g("ship"), "SH IH P");
        assert_eq!(g("city"), "S IH T IY");
        assert_eq!(g("nation"), "N AE SH AH N");
    }

    #[test]
    fn always_has_a_vowel() {
        for w in ["zzzpt", "x", "brrr", "tsk", "a"] {
            let p = grapheme_to_phoneme(w);
            assert!(p.iter().any(Phoneme::is_vowel), "{w}");
            assert_eq!(p.iter().filter(|p| p.stress == Some(1)).count(), 1);
        }
    }
}
