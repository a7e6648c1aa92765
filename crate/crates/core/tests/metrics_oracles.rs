mod common;

use std::collections::{BTreeMap, HashSet};

use common::*;
use hbayes::evaluation::{
    cross_validate_with, ndcg_at_k, ndcg_from_gains, precision_at_k, recall_at_k, stratified_folds,
};
use hbayes::{Dataset, EventRecord, Result};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<usize>, HashSet<usize>, usize) {
    let n = rng.random_range(0..=8);
    let mut ranked: Vec<usize> = (0..12).collect();
    ranked.shuffle(rng);
    ranked.truncate(n);
    // Relevant items may include some that were never ranked.
    let relevant: HashSet<usize> = (0..12).filter(|_| rng.random_bool(0.4)).collect();
    let k = rng.random_range(1..=10);
    (ranked, relevant, k)
}

#[test]
fn metrics_equal_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let (ranked, relevant, k) = random_instance(&mut rng);
        assert_eq!(
            precision_at_k(&ranked, &relevant, k),
            brute_precision(&ranked, &relevant, k)
        );
        assert_eq!(
            recall_at_k(&ranked, &relevant, k),
            brute_recall(&ranked, &relevant, k)
        );
        assert_eq!(
            ndcg_at_k(&ranked, &relevant, k),
            brute_ndcg(&ranked, &relevant, k)
        );
    }
}

#[test]
fn hand_case_ndcg() {
    let g = ndcg_from_gains(&[1.0, 0.0, 1.0], 3);
    assert!((g - 0.91972).abs() < 1e-5, "{g}");
    let ranked = ["a", "b", "c"];
    let relevant: HashSet<&str> = ["a", "c"].into_iter().collect();
    assert_eq!(ndcg_at_k(&ranked, &relevant, 3), g);
}

#[test]
fn worked_examples_for_precision_and_recall() {
    let rel: HashSet<&str> = ["a", "c"].into_iter().collect();
    assert_eq!(precision_at_k(&["a", "b"], &rel, 2), 0.5);
    assert_eq!(recall_at_k(&["a", "b", "c"], &rel, 2), 0.5);
    assert_eq!(precision_at_k::<&str>(&[], &rel, 3), 0.0);
    assert_eq!(recall_at_k(&["a"], &HashSet::new(), 3), 0.0);
    assert_eq!(ndcg_from_gains(&[0.0, 0.0], 2), 0.0);
}

proptest! {
    #[test]
    fn precision_and_recall_count_the_same_hits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ranked, relevant, k) = random_instance(&mut rng);
        let hits = ranked.iter().take(k).filter(|i| relevant.contains(i)).count() as f64;
        let p = precision_at_k(&ranked, &relevant, k) * k.min(ranked.len()) as f64;
        prop_assert!((p - p.round()).abs() < 1e-9);
        prop_assert_eq!(p.round(), if ranked.is_empty() { 0.0 } else { hits });
        if !relevant.is_empty() {
            let r = recall_at_k(&ranked, &relevant, k) * relevant.len() as f64;
            prop_assert!((r - r.round()).abs() < 1e-9);
            prop_assert_eq!(r.round(), hits);
        }
    }

    #[test]
    fn metrics_ignore_item_labels(seed in any::<u64>(), offset in 0usize..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ranked, relevant, k) = random_instance(&mut rng);
        let mut relabel: Vec<usize> = (0..12).map(|i| i * 7 + offset).collect();
        relabel.shuffle(&mut rng);
        let ranked2: Vec<usize> = ranked.iter().map(|&i| relabel[i]).collect();
        let relevant2: HashSet<usize> = relevant.iter().map(|&i| relabel[i]).collect();
        prop_assert_eq!(precision_at_k(&ranked, &relevant, k), precision_at_k(&ranked2, &relevant2, k));
        prop_assert_eq!(recall_at_k(&ranked, &relevant, k), recall_at_k(&ranked2, &relevant2, k));
        prop_assert_eq!(ndcg_at_k(&ranked, &relevant, k), ndcg_at_k(&ranked2, &relevant2, k));
    }

    #[test]
    fn metrics_stay_in_unit_interval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ranked, relevant, k) = random_instance(&mut rng);
        for m in [
            precision_at_k(&ranked, &relevant, k),
            recall_at_k(&ranked, &relevant, k),
            ndcg_at_k(&ranked, &relevant, k),
        ] {
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn macro_averages_stay_in_unit_interval(seed in 0u64..20) {
        let (data, _) = medium_dataset(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scorer = |_: &Dataset, test: &[&EventRecord], _: usize| -> Result<Vec<f64>> {
            Ok(test.iter().map(|_| rng.random::<f64>()).collect())
        };
        let report = cross_validate_with(&data, 3, seed, &[1, 5, 50], &mut scorer).unwrap();
        for m in report.folds.iter().flat_map(|f| &f.metrics).chain(&report.mean) {
            for v in [m.precision, m.recall, m.ndcg] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

#[test]
fn oracle_ranker_is_perfect() {
    let (data, _) = medium_dataset(3);
    let mut oracle = |_: &Dataset, test: &[&EventRecord], _: usize| -> Result<Vec<f64>> {
        Ok(test.iter().map(|e| e.clicked as u8 as f64).collect())
    };
    let report = cross_validate_with(&data, 5, 1, &[5, 10, 25, 50], &mut oracle).unwrap();
    for m in &report.mean {
        assert!(m.num_users_evaluated > 0);
        assert!((m.ndcg - 1.0).abs() < 1e-12, "K={} ndcg={}", m.k, m.ndcg);
    }
}

#[test]
fn single_fold_is_rejected() {
    let (data, _) = medium_dataset(3);
    let mut scorer = |_: &Dataset, test: &[&EventRecord], _: usize| -> Result<Vec<f64>> {
        Ok(vec![0.0; test.len()])
    };
    assert!(cross_validate_with(&data, 1, 0, &[10], &mut scorer).is_err());
    assert!(stratified_folds(&data, 1, 0).is_err());
}

#[test]
fn random_scores_match_permutation_null() {
    let (data, _) = medium_dataset(11);
    let (folds, seed, k) = (5, 4, 10);

    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut random = |_: &Dataset, test: &[&EventRecord], _: usize| -> Result<Vec<f64>> {
        Ok(test.iter().map(|_| rng.random::<f64>()).collect())
    };
    let observed = cross_validate_with(&data, folds, seed, &[k], &mut random)
        .unwrap()
        .mean_at(k)
        .unwrap()
        .ndcg;

    // Held-out click labels per fold and user, from the same partition.
    let labels = stratified_folds(&data, folds, seed).unwrap();
    let mut groups: Vec<BTreeMap<usize, Vec<bool>>> = vec![BTreeMap::new(); folds];
    for (t, e) in data.events.iter().enumerate() {
        if let Some(f) = labels[t] {
            groups[f].entry(e.user).or_default().push(e.clicked);
        }
    }
    let mut null_rng = ChaCha8Rng::seed_from_u64(321);
    let null: Vec<f64> = (0..10_000)
        .map(|_| {
            let mut total = 0.0;
            for fold in &groups {
                let (mut sum, mut users) = (0.0, 0);
                for clicks in fold.values().filter(|c| c.iter().any(|&y| y)) {
                    let mut order: Vec<usize> = (0..clicks.len()).collect();
                    order.shuffle(&mut null_rng);
                    let relevant: HashSet<usize> =
                        (0..clicks.len()).filter(|&i| clicks[i]).collect();
                    sum += brute_ndcg(&order, &relevant, k);
                    users += 1;
                }
                total += sum / users as f64;
            }
            total / folds as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&null);
    let sd = se * (null.len() as f64).sqrt();
    assert!(
        (observed - mean).abs() <= 3.0 * sd,
        "random scorer {observed}, permutation null {mean} ± {sd}"
    );
}
