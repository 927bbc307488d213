//! Property tests for the spec-level invariants.

mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use simpkit::corpus::{FeatureRecord, ParseTree, Sentence, TokenMode, WnllTrack};
use simpkit::idiom::{cross_entropy, DistributionTrack};
use simpkit::metrics::{bleu, sari_sentence, EvalInstance, SariOptions};
use simpkit::readability::{ngram_wnll, rsrs, WnllSource};
use simpkit::selection::{bin_records, BinStrategy};
use simpkit::similarity::{
    hashed_char_ngram_embedding, lev_sim, sem_sim, syn_sim, tree_edit_distance,
    weighted_edit_distance,
};

fn tree_catalog() -> &'static Vec<ParseTree> {
    static CATALOG: OnceLock<Vec<ParseTree>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let mut trees = Vec::new();
        for n in 1..=6 {
            trees.extend(common::all_trees(n, &["A", "B", "C"]));
        }
        trees
    })
}

fn arb_tokens() -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..4, 0..12)
}

fn arb_tree() -> impl Strategy<Value = ParseTree> {
    let len = tree_catalog().len();
    (0..len).prop_map(|i| tree_catalog()[i].clone())
}

proptest! {
    #[test]
    fn edit_distance_identity(a in arb_tokens()) {
        prop_assert_eq!(weighted_edit_distance(&a, &a), 0);
    }

    #[test]
    fn edit_distance_symmetry(a in arb_tokens(), b in arb_tokens()) {
        prop_assert_eq!(weighted_edit_distance(&a, &b), weighted_edit_distance(&b, &a));
    }

    #[test]
    fn edit_distance_triangle(a in arb_tokens(), b in arb_tokens(), c in arb_tokens()) {
        let ab = weighted_edit_distance(&a, &b);
        let bc = weighted_edit_distance(&b, &c);
        let ac = weighted_edit_distance(&a, &c);
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn edit_distance_bounds_and_lcs(a in arb_tokens(), b in arb_tokens()) {
        let d = weighted_edit_distance(&a, &b);
        prop_assert!(d <= (a.len() + b.len()) as u64);
        prop_assert_eq!(d, (a.len() + b.len()) as u64 - 2 * common::lcs_len(&a, &b));
    }

    #[test]
    fn lev_sim_range_and_symmetry(a in arb_tokens(), b in arb_tokens()) {
        prop_assume!(a.len() + b.len() > 0);
        let s = lev_sim(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, lev_sim(&b, &a).unwrap());
        if !a.is_empty() {
            prop_assert_eq!(lev_sim(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn tree_edit_identity_and_symmetry(t1 in arb_tree(), t2 in arb_tree()) {
        prop_assert_eq!(tree_edit_distance(&t1, &t1), 0);
        prop_assert_eq!(tree_edit_distance(&t1, &t2), tree_edit_distance(&t2, &t1));
        prop_assert!(tree_edit_distance(&t1, &t2) <= (t1.node_count() + t2.node_count()) as u64);
    }

    #[test]
    fn tree_edit_triangle(t1 in arb_tree(), t2 in arb_tree(), t3 in arb_tree()) {
        let d12 = tree_edit_distance(&t1, &t2);
        let d23 = tree_edit_distance(&t2, &t3);
        let d13 = tree_edit_distance(&t1, &t3);
        prop_assert!(d13 <= d12 + d23);
    }

    #[test]
    fn syn_sim_range_and_identity(t1 in arb_tree(), t2 in arb_tree()) {
        let s = syn_sim(&t1, &t2);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(syn_sim(&t1, &t1), 1.0);
    }

    #[test]
    fn rsrs_permutation_and_scaling(
        values in proptest::collection::vec(0.0f64..5.0, 1..16),
        scale in 0.1f64..4.0,
    ) {
        let base = rsrs(&WnllTrack::new(values.clone()).unwrap()).unwrap();
        prop_assert!(base >= 0.0);
        let mut rev = values.clone();
        rev.reverse();
        prop_assert_eq!(base, rsrs(&WnllTrack::new(rev).unwrap()).unwrap());
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let scaled_score = rsrs(&WnllTrack::new(scaled).unwrap()).unwrap();
        prop_assert!((scaled_score - scale * base).abs() < 1e-9 * (1.0 + scaled_score.abs()));
    }

    #[test]
    fn binning_partitions_records(
        diffs in proptest::collection::vec(0.0f64..2.0, 1..40),
        num_bins in 1usize..8,
        equal_freq in any::<bool>(),
    ) {
        let records: Vec<FeatureRecord> = diffs
            .iter()
            .enumerate()
            .map(|(i, &d)| FeatureRecord {
                pair_id: format!("p{i}"),
                rsrs_source: d,
                rsrs_target: 0.0,
                rsrs_diff: d,
                lev_sim: 0.5,
                syn_sim: None,
                sem_sim: None,
            })
            .collect();
        let strategy = if equal_freq {
            BinStrategy::EqualFrequency
        } else {
            BinStrategy::EqualWidth
        };
        let bins = bin_records(&records, num_bins, strategy).unwrap();
        let mut seen: Vec<&String> = bins.iter().flat_map(|b| b.members.iter()).collect();
        prop_assert_eq!(seen.len(), records.len());
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), records.len());
        if equal_freq {
            let sizes: Vec<usize> = bins.iter().map(|b| b.members.len()).collect();
            let min = sizes.iter().min().unwrap();
            let max = sizes.iter().max().unwrap();
            prop_assert!(max - min <= 1);
        }
    }

    #[test]
    fn hashed_embeddings_unit_norm_and_deterministic(
        text in "[a-z]{2,24}",
        dim in 8usize..64,
    ) {
        let s = Sentence::new("s", text, TokenMode::Char).unwrap();
        let e1 = hashed_char_ngram_embedding(&s, dim, 2).unwrap();
        let e2 = hashed_char_ngram_embedding(&s, dim, 2).unwrap();
        prop_assert_eq!(&e1, &e2);
        let norm: f64 = e1.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
        prop_assert!((sem_sim(&e1, &e2).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sem_sim_bounded(
        (u, v) in (2usize..16).prop_flat_map(|d| (
            proptest::collection::vec(-3.0f64..3.0, d),
            proptest::collection::vec(-3.0f64..3.0, d),
        )),
    ) {
        prop_assume!(u.iter().any(|x| *x != 0.0) && v.iter().any(|x| *x != 0.0));
        let s = sem_sim(&u, &v).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s));
    }

    #[test]
    fn ngram_probabilities_form_distribution(
        sentences in proptest::collection::vec(
            proptest::collection::vec("[a-d]", 1..8),
            1..5,
        ),
        order in 1usize..4,
    ) {
        let corpus: Vec<Vec<String>> = sentences;
        let lm = ngram_wnll(&corpus, order, 0.2).unwrap();
        let s = Sentence::new("s", corpus[0].join(" "), TokenMode::Word).unwrap();
        let track = lm.track(&s).unwrap();
        prop_assert_eq!(track.len(), s.len());
        prop_assert!(track.values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn sari_and_bleu_bounded(
        orig in proptest::collection::vec("[a-d]", 1..8),
        sys in proptest::collection::vec("[a-d]", 1..8),
        rf in proptest::collection::vec("[a-d]", 1..8),
    ) {
        let inst = EvalInstance {
            original: orig,
            system: sys,
            references: vec![rf],
        };
        let s = sari_sentence(&inst, SariOptions::default(), TokenMode::Word).unwrap();
        for v in [s.keep, s.add, s.del, s.mean] {
            prop_assert!((0.0..=100.0 + 1e-9).contains(&v));
        }
        let b = bleu(std::slice::from_ref(&inst), false).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
        let bs = bleu(std::slice::from_ref(&inst), true).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&bs));
    }

    #[test]
    fn cross_entropy_nonnegative(
        len in 1usize..8,
        vocab in 2usize..5,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..len)
            .map(|_| {
                let raw: Vec<f64> = (0..vocab).map(|_| rng.gen_range(0.01..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let track = DistributionTrack::new(rows).unwrap();
        let targets: Vec<usize> = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
        let ce = cross_entropy(&track, &targets, None).unwrap();
        prop_assert!(ce >= 0.0);
        prop_assert_eq!(cross_entropy(&track, &targets, Some((0, 0))).unwrap(), 0.0);
    }
}
