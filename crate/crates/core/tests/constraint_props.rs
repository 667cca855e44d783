use std::collections::BTreeMap;

use phraselette_core::constraints::{
    aggregate, score_all, score_constraint, Constraint, ConstraintSpec, IntRange, LogProbBand,
};
use phraselette_core::matching::MatchMode;
use phraselette_core::model::{Rephrasing, WellId};
use phraselette_core::orchestrator::sort_and_dedupe;
use phraselette_core::phonology::{Phonology, SoundMode, SoundRef};
use phraselette_core::pos::{default_tagger, PosTag};
use phraselette_core::views;
use proptest::prelude::*;

const WORDS: [&str; 16] = [
    "glazed", "with", "rain", "water", "beside", "the", "white", "chickens", "sick", "style",
    "plasticized", "onto", "vitrified", "per", "slowly", "gleaming",
];

fn annotated(text: &str, log_prob: f64) -> Rephrasing {
    let mut r = Rephrasing::new(WellId::from("w"), text, 1, 0.0).unwrap();
    views::annotate_pos(&mut r, default_tagger().as_ref());
    views::annotate_phonemes(&mut r, &Phonology::bundled());
    views::attach_log_probs(&mut r, &[(text.to_owned(), log_prob)]);
    r
}

fn phrase() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(WORDS.to_vec()), 1..7).prop_map(|w| w.join(" "))
}

fn range() -> impl Strategy<Value = IntRange> {
    (0usize..8, 0usize..5).prop_map(|(a, w)| IntRange::new(a, a + w).unwrap())
}

fn spec() -> impl Strategy<Value = ConstraintSpec> {
    let tag = proptest::sample::select(vec![PosTag::Noun, PosTag::Verb, PosTag::Adj, PosTag::Adp, PosTag::Det]);
    let mode = proptest::sample::select(MatchMode::ALL.to_vec());
    let sound_mode = proptest::sample::select(vec![
        SoundMode::StartsWith,
        SoundMode::EndsWith,
        SoundMode::Contains,
        SoundMode::RhymesWith,
    ]);
    prop_oneof![
        (proptest::collection::vec(tag, 1..3), mode)
            .prop_map(|(tags, mode)| ConstraintSpec::PosSequence { tags, mode }),
        (proptest::sample::select(WORDS.to_vec()), sound_mode).prop_map(|(w, m)| {
            let p = Phonology::bundled().pronounce(w).unwrap().phonemes;
            ConstraintSpec::SoundRef(SoundRef::new(p, m).unwrap())
        }),
        range().prop_map(ConstraintSpec::WordCount),
        range().prop_map(ConstraintSpec::SyllableCount),
        (-30.0f64..0.0, 0.0f64..15.0).prop_map(|(hi, w)| ConstraintSpec::LogProbBand(
            LogProbBand::new(hi - w, hi).unwrap()
        )),
    ]
}

fn constraints() -> impl Strategy<Value = Vec<Constraint>> {
    proptest::collection::vec(spec(), 0..6).prop_map(|specs| {
        specs
            .into_iter()
            .enumerate()
            .map(|(i, s)| Constraint::new(format!("c{i}"), WellId::from("w"), s).unwrap())
            .collect()
    })
}

proptest! {
    #[test]
    fn scores_are_unit_interval_and_symbolic_is_binary(p in phrase(), lp in -40.0f64..0.0, cs in constraints()) {
        let r = annotated(&p, lp);
        for c in &cs {
            let s = score_constraint(c, &r).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            if c.spec.is_symbolic() || matches!(c.spec, ConstraintSpec::LogProbBand(_)) {
                prop_assert!(s == 0.0 || s == 1.0);
            }
        }
    }

    #[test]
    fn graded_counts_are_monotone_toward_the_range(r in range(), x in 0usize..20) {
        let toward = if x < r.min { x + 1 } else if x > r.max { x - 1 } else { x };
        prop_assert!(r.graded(toward) >= r.graded(x));
        prop_assert_eq!(r.graded(x) == 1.0, r.contains(x));
    }

    #[test]
    fn score_all_is_order_invariant_and_idempotent(p in phrase(), lp in -40.0f64..0.0, cs in constraints(), rot in 0usize..6) {
        let r = annotated(&p, lp);
        let first = score_all(&cs, &r).unwrap();
        let mut shuffled = cs.clone();
        shuffled.reverse();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
        }
        prop_assert_eq!(&score_all(&shuffled, &r).unwrap(), &first);
        let mut again = r.clone();
        again.set_scores(first.0.clone());
        let once = again.clone();
        again.set_scores(again.constraint_scores.clone());
        prop_assert_eq!(again, once);
    }

    #[test]
    fn mean_is_permutation_invariant(mut xs in proptest::collection::vec(0.0f64..=1.0, 0..12)) {
        let (a, fa) = aggregate(xs.iter().copied());
        xs.reverse();
        let (b, fb) = aggregate(xs.iter().copied());
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert_eq!(fa, fb);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn fully_matched_entries_sort_first(
        entries in proptest::collection::vec((phrase(), -40.0f64..0.0, -5.0f64..0.0), 1..20),
        cs in constraints(),
    ) {
        let pool: Vec<Rephrasing> = entries
            .iter()
            .map(|(p, lp, internal)| {
                let mut r = annotated(p, *lp);
                r.internal_score = *internal;
                let (scores, _, _) = score_all(&cs, &r).unwrap();
                r.set_scores(scores);
                r
            })
            .collect();
        let sorted = sort_and_dedupe(pool);
        let first_partial = sorted.iter().position(|r| !r.fully_matched).unwrap_or(sorted.len());
        prop_assert!(sorted[first_partial..].iter().all(|r| !r.fully_matched));
        prop_assert!(sorted.windows(2).all(|w| w[0].overall_score >= w[1].overall_score));
    }
}

#[test]
fn single_word_count_scores() {
    let r = annotated("sick style", -3.0);
    let c = |min, max| {
        Constraint::new("words", WellId::from("w"), ConstraintSpec::WordCount(IntRange::new(min, max).unwrap()))
            .unwrap()
    };
    let scores: BTreeMap<_, _> = [(1, 4), (3, 5), (4, 6), (6, 8)]
        .into_iter()
        .map(|(a, b)| ((a, b), score_constraint(&c(a, b), &r).unwrap()))
        .collect();
    assert_eq!(scores[&(1, 4)], 1.0);
    assert_eq!(scores[&(3, 5)], 0.5);
    assert_eq!(scores[&(4, 6)], 0.0);
    assert_eq!(scores[&(6, 8)], 0.0);
}
