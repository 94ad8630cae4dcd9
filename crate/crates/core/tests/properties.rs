mod common;

use proptest::prelude::*;
use rankset::data::{pairwise_from_utilities, parse_letor, ranking_from_relevance};
use rankset::diversity::{greedy_prune_with, PruneRule};
use rankset::{
    diversity, exhaustive_prune, fdp, greedy_prune, hoeffding_ucb, item_scores, threshold_set,
    top_m_items, EmbeddingSet, PairwiseScores, PredictionSet, Ranking,
};

fn matrix(max_k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_k).prop_flat_map(|k| prop::collection::vec(prop::collection::vec(0.0..=1.0f64, k), k))
}

fn ranking_and_set(max_k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>, usize)> {
    (1..=max_k).prop_flat_map(|k| {
        (
            Just((1..=k).collect::<Vec<_>>()).prop_shuffle(),
            prop::sample::subsequence((0..k).collect::<Vec<_>>(), 0..=k),
            1..=k,
        )
    })
}

fn points(max_n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), 1..=max_n)
}

proptest! {
    #[test]
    fn threshold_sets_are_nested(
        s in prop::collection::vec(0.0..=1.0f64, 0..40),
        a in 0.0..=1.0f64,
        b in 0.0..=1.0f64,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(threshold_set(&s, hi).is_subset_of(&threshold_set(&s, lo)));
    }

    #[test]
    fn scores_ignore_diagonal(rows in matrix(12), diag in prop::collection::vec(-3.0..3.0f64, 12)) {
        let mut other = rows.clone();
        for (i, row) in other.iter_mut().enumerate() {
            row[i] = diag[i];
        }
        let a = item_scores(&PairwiseScores::from_rows(&rows).unwrap());
        let b = item_scores(&PairwiseScores::from_rows(&other).unwrap());
        prop_assert_eq!(a.clone(), b);
        prop_assert!(a.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn fdp_bounds_and_partition((ranks, items, m) in ranking_and_set(30)) {
        let ranking = Ranking::new(ranks.clone()).unwrap();
        let set = PredictionSet::new(items.clone()).unwrap();
        let v = fdp(&set, &ranking, m).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        let mut shuffled = items.clone();
        shuffled.reverse();
        prop_assert_eq!(fdp(&PredictionSet::from_unsorted(shuffled), &ranking, m).unwrap(), v);
        if items.is_empty() {
            prop_assert_eq!(v, 0.0);
        } else {
            let top = top_m_items(&ranking, m).unwrap();
            let good = items.iter().filter(|&&i| top.contains(i)).count();
            prop_assert!((v + good as f64 / items.len() as f64 - 1.0).abs() < 1e-12);
        }
        prop_assert_eq!(top_m_items(&ranking, m).unwrap().len(), m);
    }

    #[test]
    fn hoeffding_monotone(mean in 0.0..1.0f64, n in 1usize..100_000, delta in 0.001..0.999f64) {
        let base = hoeffding_ucb(mean, n, delta).unwrap();
        prop_assert!(hoeffding_ucb(mean, n + 1, delta).unwrap() < base);
        prop_assert!(hoeffding_ucb(mean + 0.01, n, delta).unwrap() > base);
        prop_assert!(hoeffding_ucb(mean, n, delta * 0.9).unwrap() > base);
    }

    #[test]
    fn relevance_ranking_is_stable_permutation(labels in prop::collection::vec(0u32..5, 1..40)) {
        let r = ranking_from_relevance(&labels).unwrap();
        let mut sorted = r.ranks().to_vec();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (1..=labels.len()).collect::<Vec<_>>());
        for a in 0..labels.len() {
            for b in a + 1..labels.len() {
                if labels[a] == labels[b] {
                    prop_assert!(r.rank(a) < r.rank(b));
                } else {
                    prop_assert_eq!(labels[a] > labels[b], r.rank(a) < r.rank(b));
                }
            }
        }
    }

    #[test]
    fn logistic_link_is_skew_and_ordered(
        u in prop::collection::vec(-20.0..20.0f64, 1..20),
        t in 0.05..5.0f64,
    ) {
        let p = pairwise_from_utilities(&u, t).unwrap();
        prop_assert!(p.is_skew_consistent(1e-12));
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j && u[i] > u[j] + 1e-9 {
                    prop_assert!(p.get(i, j) > 0.5);
                }
            }
        }
    }

    #[test]
    fn greedy_keeps_subset_of_capped_size(pts in points(14, 3), m in 1usize..6) {
        let e = EmbeddingSet::new(&pts).unwrap();
        let s = PredictionSet::from_unsorted((0..pts.len()).collect());
        for rule in [PruneRule::MostDiverseRemainder, PruneRule::LeastDiverseRemainder] {
            let g = greedy_prune_with(&s, &e, m, rule).unwrap();
            prop_assert!(g.is_subset_of(&s));
            prop_assert_eq!(g.len(), s.len().min(m));
        }
    }

    #[test]
    fn greedy_never_beats_exhaustive(pts in points(10, 2), m in 1usize..6) {
        let e = EmbeddingSet::new(&pts).unwrap();
        let s = PredictionSet::from_unsorted((0..pts.len()).collect());
        let g = diversity(&greedy_prune(&s, &e, m).unwrap(), &e, m).unwrap();
        let x = diversity(&exhaustive_prune(&s, &e, m).unwrap(), &e, m).unwrap();
        prop_assert!(g <= x + 1e-12 * (1.0 + x));
    }

    #[test]
    fn rigid_motion_and_scaling(
        pts in points(9, 2),
        angle in 0.0..std::f64::consts::TAU,
        shift in (-5.0..5.0f64, -5.0..5.0f64),
        scale in 0.1..10.0f64,
        m in 1usize..5,
    ) {
        let (sin, cos) = angle.sin_cos();
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| vec![cos * p[0] - sin * p[1] + shift.0, sin * p[0] + cos * p[1] + shift.1])
            .collect();
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x * scale).collect()).collect();
        let s = PredictionSet::from_unsorted((0..pts.len()).collect());
        let e = EmbeddingSet::new(&pts).unwrap();
        let base = diversity(&s, &e, m).unwrap();
        let em = EmbeddingSet::new(&moved).unwrap();
        prop_assert!((diversity(&s, &em, m).unwrap() - base).abs() < 1e-9 * (1.0 + base));
        let es = EmbeddingSet::new(&scaled).unwrap();
        prop_assert!((diversity(&s, &es, m).unwrap() - scale * base).abs() < 1e-9 * (1.0 + scale * base));
        prop_assert_eq!(greedy_prune(&s, &es, m).unwrap(), greedy_prune(&s, &e, m).unwrap());
        prop_assert_eq!(exhaustive_prune(&s, &es, m).unwrap(), exhaustive_prune(&s, &e, m).unwrap());
    }

    #[test]
    fn diversity_matches_pairwise_sum(pts in points(12, 4), m in 1usize..8) {
        let e = EmbeddingSet::new(&pts).unwrap();
        let idx: Vec<usize> = (0..pts.len()).step_by(2).collect();
        let got = diversity(&PredictionSet::new(idx.clone()).unwrap(), &e, m).unwrap();
        prop_assert!((got - common::oracle_diversity(&idx, &pts, m)).abs() < 1e-12);
    }

    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        let _ = parse_letor(&bytes);
    }
}
