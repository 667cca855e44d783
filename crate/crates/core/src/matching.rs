//! Symbolic sequence matching shared by POS-tag and phoneme constraints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How a pattern must relate to a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MatchMode {
    Exact,
    StartsWith,
    EndsWith,
    /// Contiguous run anywhere.
    Contains,
    /// Subsequence, gaps allowed.
    InOrder,
}

impl MatchMode {
    pub const ALL: [MatchMode; 5] = [
        MatchMode::Exact,
        MatchMode::StartsWith,
        MatchMode::EndsWith,
        MatchMode::Contains,
        MatchMode::InOrder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::Exact => "exact",
            MatchMode::StartsWith => "startsWith",
            MatchMode::EndsWith => "endsWith",
            MatchMode::Contains => "contains",
            MatchMode::InOrder => "inOrder",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "exact" => Ok(MatchMode::Exact),
            "startswith" | "starts" | "begins" | "beginswith" => Ok(MatchMode::StartsWith),
            "endswith" | "ends" => Ok(MatchMode::EndsWith),
            "contains" => Ok(MatchMode::Contains),
            "inorder" | "ordered" => Ok(MatchMode::InOrder),
            _ => Err(format!("unknown match mode {s:?}")),
        }
    }
}

/// Tests `seq` against a non-empty `pattern`. An empty pattern matches
/// nothing.
pub fn sequence_matches<T: PartialEq>(seq: &[T], pattern: &[T], mode: MatchMode) -> bool {
    if pattern.is_empty() {
        return false;
    }
    match mode {
        MatchMode::Exact => seq == pattern,
        MatchMode::StartsWith => seq.starts_with(pattern),
        MatchMode::EndsWith => seq.ends_with(pattern),
        MatchMode::Contains => seq.windows(pattern.len()).any(|w| w == pattern),
        MatchMode::InOrder => {
            let mut rest = pattern.iter().peekable();
            for item in seq {
                if rest.peek() == Some(&item) {
                    rest.next();
                }
            }
            rest.peek().is_none()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_on_small_lists() {
        let seq = [1, 2, 3];
        assert!(sequence_matches(&seq, &[1], MatchMode::StartsWith));
        assert!(sequence_matches(&seq, &[2, 3], MatchMode::EndsWith));
        assert!(sequence_matches(&seq, &[1, 3], MatchMode::InOrder));
        assert!(!sequence_matches(&seq, &[1, 3], MatchMode::Contains));
        assert!(!sequence_matches(&seq[..1], &[1, 2], MatchMode::Exact));
        assert!(!sequence_matches(&seq, &[], MatchMode::Contains));
    }

    #[test]
    fn parses_mode_spellings() {
        assert_eq!("startsWith".parse(), Ok(MatchMode::StartsWith));
        assert_eq!("starts with".parse(), Ok(MatchMode::StartsWith));
        assert_eq!("in-order".parse(), Ok(MatchMode::InOrder));
        assert!("sideways".parse::<MatchMode>().is_err());
    }
}
