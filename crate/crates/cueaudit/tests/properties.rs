//! Property-based checks for the algebraic core: canonicalization, shift
//! decomposition, rationale classification, score aggregation, distances.

use std::collections::BTreeMap;

use proptest::prelude::*;

use cueaudit::analysis::{alpha, delta_decomposition, dist, EmbeddingVector};
use cueaudit::core::{canonicalize_verdict, OutcomeDistribution, Perm, Verdict};
use cueaudit::protocols::{aggregate_scores, CriterionScores, CriterionSet, DISPLAY_SLOTS};

fn verdict_strategy() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Order12), Just(Verdict::Order21), Just(Verdict::Tie)]
}

fn perm_strategy() -> impl Strategy<Value = Perm> {
    prop_oneof![Just(Perm::Identity), Just(Perm::Swap)]
}

fn distribution_strategy() -> impl Strategy<Value = OutcomeDistribution> {
    (0usize..200, 0usize..200, 0usize..200)
        .prop_filter("non-empty", |(a, b, c)| a + b + c > 0)
        .prop_map(|(a, b, c)| OutcomeDistribution::from_counts(a, b, c).unwrap())
}

fn vector_of(dim: usize) -> impl Strategy<Value = EmbeddingVector> {
    proptest::collection::vec(-10.0f64..10.0, dim)
        .prop_filter("non-zero norm", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|v| EmbeddingVector::new(v, "prop").unwrap())
}

fn vector_pair() -> impl Strategy<Value = (EmbeddingVector, EmbeddingVector)> {
    (4usize..16).prop_flat_map(|dim| (vector_of(dim), vector_of(dim)))
}

fn vector_triple() -> impl Strategy<Value = (EmbeddingVector, EmbeddingVector, EmbeddingVector)> {
    (4usize..16).prop_flat_map(|dim| (vector_of(dim), vector_of(dim), vector_of(dim)))
}

proptest! {
    #[test]
    fn canonicalization_is_an_involution(v in verdict_strategy(), p in perm_strategy()) {
        prop_assert_eq!(canonicalize_verdict(canonicalize_verdict(v, p), p), v);
    }

    #[test]
    fn swap_exchanges_orders_and_fixes_ties(v in verdict_strategy()) {
        let swapped = canonicalize_verdict(v, Perm::Swap);
        match v {
            Verdict::Order12 => prop_assert_eq!(swapped, Verdict::Order21),
            Verdict::Order21 => prop_assert_eq!(swapped, Verdict::Order12),
            Verdict::Tie => prop_assert_eq!(swapped, Verdict::Tie),
        }
    }

    #[test]
    fn delta_decomposition_conserves_mass(
        dp in distribution_strategy(),
        db in distribution_strategy(),
        favored in prop_oneof![Just(Verdict::Order12), Just(Verdict::Order21)],
    ) {
        let d = delta_decomposition(&dp, &db, favored).unwrap();
        prop_assert!((d.delta_fav + d.delta_opp + d.delta_tie).abs() <= 1e-12);
        prop_assert!(d.lds >= 0.0 && d.ols >= 0.0 && d.ts >= 0.0);
        prop_assert!(d.lds <= 1.0 && d.ols <= 1.0 && d.ts <= 1.0);
    }

    #[test]
    fn alpha_is_ternary_and_exhaustive((e, f, o) in vector_triple()) {
        let a = alpha(&e, &f, &o).unwrap();
        prop_assert!(a == 0.0 || a == 0.5 || a == 1.0);
    }

    #[test]
    fn dist_axioms_hold((a, b) in vector_pair()) {
        prop_assert!(dist(&a, &a).unwrap() < 1e-12);
        let d = dist(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - dist(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn aggregate_scores_is_antisymmetric(
        s1 in proptest::collection::vec(0u8..=5, 4),
        s2 in proptest::collection::vec(0u8..=5, 4),
    ) {
        let crit = CriterionSet::default();
        let per = |vals: &[u8]| -> BTreeMap<String, u8> {
            crit.criteria.iter().cloned().zip(vals.iter().copied()).collect()
        };
        let mut fwd = BTreeMap::new();
        fwd.insert(DISPLAY_SLOTS[0].to_string(), per(&s1));
        fwd.insert(DISPLAY_SLOTS[1].to_string(), per(&s2));
        let mut rev = BTreeMap::new();
        rev.insert(DISPLAY_SLOTS[0].to_string(), per(&s2));
        rev.insert(DISPLAY_SLOTS[1].to_string(), per(&s1));
        let vf = aggregate_scores(&CriterionScores { scores: fwd }, &crit);
        let vr = aggregate_scores(&CriterionScores { scores: rev }, &crit);
        match vf {
            Verdict::Order12 => prop_assert_eq!(vr, Verdict::Order21),
            Verdict::Order21 => prop_assert_eq!(vr, Verdict::Order12),
            Verdict::Tie => prop_assert_eq!(vr, Verdict::Tie),
        }
    }
}
