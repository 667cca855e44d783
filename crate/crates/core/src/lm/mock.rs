//! Deterministic in-process backends driven by JSON fixtures.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    finish_items, InstructBackend, InstructRequest, LmError, LogitBackend, LogitResult, Token,
    TokenId, Vocab,
};

/// Transition-table fixture: `transitions` maps a comma-joined context of
/// token ids (`""` for the empty context) to next-token probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockLogitFixture {
    pub vocab: Vec<String>,
    pub transitions: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_context: Option<usize>,
    /// Simulates a backend outage: every call fails.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unavailable: bool,
}

impl MockLogitFixture {
    pub fn load(path: &Path) -> Result<Self, LmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LmError::Fixture(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| LmError::Fixture(format!("{}: {e}", path.display())))
    }

    /// Random table over `vocab`: every context up to `depth` tokens long
    /// gets a row with random (mostly distinct) probabilities.
    pub fn random(vocab: Vec<String>, depth: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = vocab.len();
        let mut transitions = BTreeMap::new();
        let mut contexts: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..depth {
            let next: Vec<Vec<usize>> = contexts
                .iter()
                .filter(|c| c.len() == contexts.last().map_or(0, Vec::len))
                .flat_map(|c| {
                    (0..n).map(move |t| {
                        let mut c = c.clone();
                        c.push(t);
                        c
                    })
                })
                .collect();
            contexts.extend(next);
        }
        for ctx in contexts {
            let key = ctx.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
            let row: BTreeMap<String, f64> = (0..n)
                .map(|t| (t.to_string(), rng.gen_range(0.01..1.0)))
                .collect();
            transitions.insert(key, row);
        }
        Self {
            vocab,
            transitions,
            max_context: None,
            unavailable: false,
        }
    }
}

/// Fixture-backed logit tier. Rows are normalised at load; lookups back off
/// to the longest context suffix that has a row, and to a uniform
/// distribution when none does.
#[derive(Clone, Debug)]
pub struct MockLogit {
    vocab: Vocab,
    rows: HashMap<Vec<TokenId>, Vec<(TokenId, f64)>>,
    longest_context: usize,
    max_context: Option<usize>,
    unavailable: bool,
}

impl MockLogit {
    pub fn from_fixture(fixture: &MockLogitFixture) -> Result<Self, LmError> {
        if fixture.vocab.is_empty() {
            return Err(LmError::Fixture("vocab is empty".into()));
        }
        let n = fixture.vocab.len();
        let parse_id = |s: &str| -> Result<TokenId, LmError> {
            let id: TokenId = s
                .trim()
                .parse()
                .map_err(|_| LmError::Fixture(format!("bad token id {s:?}")))?;
            if id as usize >= n {
                return Err(LmError::Fixture(format!("token id {id} outside vocab of {n}")));
            }
            Ok(id)
        };
        let mut rows = HashMap::new();
        let mut longest_context = 0;
        for (ctx, row) in &fixture.transitions {
            let key: Vec<TokenId> = if ctx.trim().is_empty() {
                vec![]
            } else {
                ctx.split(',').map(parse_id).collect::<Result<_, _>>()?
            };
            let mut probs = Vec::new();
            for (tok, &p) in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(LmError::Fixture(format!("probability {p} in row {ctx:?}")));
                }
                probs.push((parse_id(tok)?, p));
            }
            let total: f64 = probs.iter().map(|(_, p)| p).sum();
            if total <= 0.0 {
                return Err(LmError::Fixture(format!("row {ctx:?} has no probability mass")));
            }
            let logs: Vec<(TokenId, f64)> = probs
                .into_iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(t, p)| (t, (p / total).ln()))
                .collect();
            longest_context = longest_context.max(key.len());
            rows.insert(key, logs);
        }
        Ok(Self {
            vocab: Vocab::new(fixture.vocab.clone()),
            rows,
            longest_context,
            max_context: fixture.max_context,
            unavailable: fixture.unavailable,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        Self::from_fixture(&MockLogitFixture::load(path)?)
    }

    fn row_for(&self, prefix: &[TokenId]) -> Option<&Vec<(TokenId, f64)>> {
        let k = prefix.len().min(self.longest_context);
        (0..=k).rev().find_map(|len| self.rows.get(&prefix[prefix.len() - len..]))
    }
}

impl LogitBackend for MockLogit {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<LogitResult, LmError> {
        if self.unavailable {
            return Err(LmError::BackendUnavailable("mock logit backend marked unavailable".into()));
        }
        if let Some(&bad) = prefix.iter().find(|&&t| t > self.vocab.unknown_id()) {
            return Err(LmError::InvalidToken(bad));
        }
        if let Some(max) = self.max_context {
            if prefix.len() > max {
                return Err(LmError::ContextTooLong { len: prefix.len(), max });
            }
        }
        let token = |id: TokenId| Token {
            id,
            surface: self.vocab.surface(id).unwrap_or_default().to_owned(),
        };
        let distribution = match self.row_for(prefix) {
            Some(row) => row.iter().map(|&(id, lp)| (token(id), lp)).collect(),
            None => {
                let lp = -(self.vocab.len() as f64).ln();
                (0..self.vocab.len() as TokenId).map(|id| (token(id), lp)).collect()
            }
        };
        Ok(LogitResult::sorted(prefix.to_vec(), distribution))
    }
}

/// Canned answer list, selected when `marker` (and every string in
/// `requires`) occurs in the system or user text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructRule {
    pub marker: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requires: Vec<String>,
    pub items: Vec<String>,
    /// When set, the number of returned items varies per request between
    /// this and the request cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_items: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockInstructFixture {
    pub rules: Vec<InstructRule>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unavailable: bool,
}

impl MockInstructFixture {
    pub fn load(path: &Path) -> Result<Self, LmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LmError::Fixture(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| LmError::Fixture(format!("{}: {e}", path.display())))
    }
}

/// Instruct tier answering from canned rules. Output is a pure function of
/// the request (including its seed): the first matching rule's items are
/// shuffled by a generator seeded from a hash of the request.
#[derive(Clone, Debug)]
pub struct MockInstruct {
    fixture: MockInstructFixture,
}

impl MockInstruct {
    pub fn new(fixture: MockInstructFixture) -> Self {
        Self { fixture }
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        Ok(Self::new(MockInstructFixture::load(path)?))
    }

    fn rng_for(req: &InstructRequest) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(req.system_text.as_bytes());
        h.update([0]);
        h.update(req.user_text.as_bytes());
        h.update([0]);
        h.update((req.max_output_items as u64).to_le_bytes());
        match req.seed {
            Some(s) => {
                h.update([1]);
                h.update(s.to_le_bytes());
            }
            None => h.update([0]),
        }
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&h.finalize());
        ChaCha8Rng::from_seed(seed)
    }
}

impl InstructBackend for MockInstruct {
    fn complete(&self, req: &InstructRequest) -> Result<Vec<String>, LmError> {
        req.validate()?;
        if self.fixture.unavailable {
            return Err(LmError::BackendUnavailable("mock instruct backend marked unavailable".into()));
        }
        let present = |m: &String| req.system_text.contains(m.as_str()) || req.user_text.contains(m.as_str());
        let rule = self
            .fixture
            .rules
            .iter()
            .find(|r| present(&r.marker) && r.requires.iter().all(present))
            .ok_or_else(|| LmError::MalformedResponse("no canned rule matches the prompt".into()))?;
        let mut rng = Self::rng_for(req);
        let mut items = rule.items.clone();
        items.shuffle(&mut rng);
        let cap = items.len().min(req.max_output_items);
        let count = match rule.min_items {
            Some(min) if min < cap => rng.gen_range(min.max(1)..=cap),
            _ => cap,
        };
        items.truncate(count);
        finish_items(items, req.max_output_items)
    }
}
