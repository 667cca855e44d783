//! Shared test helpers: random mock fixtures and brute-force oracles.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::path::PathBuf;
use std::sync::Arc;

use phraselette_core::lm::{InstructBackend, LogitBackend, MockInstruct, MockLogit, MockLogitFixture, TokenId};
use phraselette_core::matching::MatchMode;
use phraselette_core::model::{CharRange, Document, InletId};
use phraselette_core::wells::WellServices;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SURFACES: [&str; 12] = [
    " the", " glass", "y", " sun", " on", "ice", " of", " a", "ed", " slow", "ly", " gold",
];

/// A random transition table over `n` distinct surfaces from a fixed pool.
pub fn random_mock(n: usize, depth: usize, seed: u64) -> MockLogit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<String> = SURFACES.iter().map(|s| s.to_string()).collect();
    pool.shuffle(&mut rng);
    pool.truncate(n);
    let fx = MockLogitFixture::random(pool, depth, rng.gen());
    MockLogit::from_fixture(&fx).expect("random fixture is valid")
}

/// One enumerated sequence with its summed log-probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Enumerated {
    pub ids: Vec<TokenId>,
    pub text: String,
    pub log_prob: f64,
}

/// Every token sequence of length 1..=max_tokens after `context`, with
/// log-probabilities summed left to right, restricted to sequences with at
/// least one word.
pub fn enumerate_all(backend: &dyn LogitBackend, context: &[TokenId], max_tokens: usize) -> Vec<Enumerated> {
    let mut out = Vec::new();
    let mut frontier = vec![Enumerated {
        ids: vec![],
        text: String::new(),
        log_prob: 0.0,
    }];
    for _ in 0..max_tokens {
        let mut next = Vec::new();
        for e in &frontier {
            let mut prefix = context.to_vec();
            prefix.extend(&e.ids);
            let dist = backend.next_distribution(&prefix).expect("mock distribution");
            for (tok, lp) in dist.distribution {
                let mut child = e.clone();
                child.ids.push(tok.id);
                child.text.push_str(&tok.surface);
                child.log_prob += lp;
                next.push(child);
            }
        }
        out.extend(next.iter().filter(|e| e.text.split_whitespace().next().is_some()).cloned());
        frontier = next;
    }
    out
}

/// Log-probability descending, then token ids ascending.
pub fn oracle_order(a: &Enumerated, b: &Enumerated) -> Ordering {
    b.log_prob.total_cmp(&a.log_prob).then_with(|| a.ids.cmp(&b.ids))
}

pub fn oracle_top_k(backend: &dyn LogitBackend, context: &[TokenId], max_tokens: usize, k: usize) -> Vec<Enumerated> {
    let mut all = enumerate_all(backend, context, max_tokens);
    all.sort_by(oracle_order);
    all.truncate(k);
    all
}

/// Brute-force sequence matching straight from the definitions.
pub fn brute_match<T: PartialEq>(seq: &[T], pat: &[T], mode: MatchMode) -> bool {
    if pat.is_empty() {
        return false;
    }
    let n = pat.len();
    match mode {
        MatchMode::Exact => seq == pat,
        MatchMode::StartsWith => seq.len() >= n && seq[..n] == *pat,
        MatchMode::EndsWith => seq.len() >= n && seq[seq.len() - n..] == *pat,
        MatchMode::Contains => (0..=seq.len().saturating_sub(n))
            .any(|i| seq.len() >= n && seq[i..i + n] == *pat),
        MatchMode::InOrder => {
            // any strictly increasing index choice
            fn go<T: PartialEq>(seq: &[T], pat: &[T]) -> bool {
                match pat.split_first() {
                    None => true,
                    Some((p, rest)) => (0..seq.len()).any(|i| seq[i] == *p && go(&seq[i + 1..], rest)),
                }
            }
            go(seq, pat)
        }
    }
}

/// Resolves from any crate in the workspace, so other crates' tests can
/// share these fixtures.
pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(FIXTURES).join(name)
}

pub fn mock_logit() -> Arc<MockLogit> {
    Arc::new(MockLogit::load(&fixture("mock-logit.json")).unwrap())
}

pub fn mock_instruct() -> Arc<MockInstruct> {
    Arc::new(MockInstruct::load(&fixture("mock-instruct.json")).unwrap())
}

pub fn services() -> WellServices {
    let instruct: Arc<dyn InstructBackend> = mock_instruct();
    let logit: Arc<dyn LogitBackend> = mock_logit();
    WellServices::new(Some(logit), Some(instruct))
}

pub const POEM: &str = "red wheel glazed with rain water\nbeside the white chickens\n";

/// The poem with an inlet on "glazed with".
pub fn poem() -> (Document, InletId) {
    let mut doc = Document::new("poem", POEM);
    let id = doc.create_inlet(CharRange::new(10, 21)).unwrap().id.clone();
    (doc, id)
}
