//! Ranking metrics and a per-user stratified cross-validation harness.

use std::collections::HashSet;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HBayesError, Result};
use crate::inference::{fit_with, FitOptions};
use crate::model::{Dataset, EventRecord, HyperParams};
use crate::predictor;

/// Cutoffs reported by default.
pub const DEFAULT_KS: [usize; 4] = [5, 10, 25, 50];

fn hits_at_k<I: Eq + Hash>(ranked: &[I], relevant: &HashSet<I>, k: usize) -> usize {
    ranked
        .iter()
        .take(k)
        .filter(|i| relevant.contains(i))
        .count()
}

/// `|top-K ∩ relevant| / min(K, |ranked|)`; 0 for an empty ranking.
pub fn precision_at_k<I: Eq + Hash>(ranked: &[I], relevant: &HashSet<I>, k: usize) -> f64 {
    let denom = k.min(ranked.len());
    if denom == 0 {
        return 0.0;
    }
    hits_at_k(ranked, relevant, k) as f64 / denom as f64
}

/// `|top-K ∩ relevant| / |relevant|`; 0 when nothing is relevant.
pub fn recall_at_k<I: Eq + Hash>(ranked: &[I], relevant: &HashSet<I>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    hits_at_k(ranked, relevant, k) as f64 / relevant.len() as f64
}

/// DCG of a gain sequence truncated at `k`, with `log2(rank + 1)` discounts.
pub fn dcg_at_k(gains: &[f64], k: usize) -> f64 {
    gains
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| g / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG of gains listed in ranked order. The ideal ordering sorts the same
/// gains descending; returns 0 when the ideal DCG is 0.
pub fn ndcg_from_gains(gains: &[f64], k: usize) -> f64 {
    let mut ideal = gains.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg_at_k(&ideal, k);
    if idcg <= 0.0 {
        return 0.0;
    }
    dcg_at_k(gains, k) / idcg
}

/// Binary-relevance NDCG@K of `ranked`.
pub fn ndcg_at_k<I: Eq + Hash>(ranked: &[I], relevant: &HashSet<I>, k: usize) -> f64 {
    let gains: Vec<f64> = ranked
        .iter()
        .map(|i| if relevant.contains(i) { 1.0 } else { 0.0 })
        .collect();
    ndcg_from_gains(&gains, k)
}

/// Macro-averaged metrics at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub num_users_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub metrics: Vec<MetricReport>,
}

/// Per-fold reports plus the mean and sample standard deviation across folds.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean: Vec<MetricReport>,
    pub std: Vec<MetricReport>,
}

impl CvReport {
    pub fn mean_at(&self, k: usize) -> Option<&MetricReport> {
        self.mean.iter().find(|m| m.k == k)
    }
}

/// Scores held-out events after seeing a training split.
pub trait Scorer {
    fn score(&mut self, train: &Dataset, test: &[&EventRecord], fold: usize) -> Result<Vec<f64>>;
}

impl<F> Scorer for F
where
    F: FnMut(&Dataset, &[&EventRecord], usize) -> Result<Vec<f64>>,
{
    fn score(&mut self, train: &Dataset, test: &[&EventRecord], fold: usize) -> Result<Vec<f64>> {
        self(train, test, fold)
    }
}

/// Fits the hierarchical model on each training split and scores held-out
/// events by predictive click probability.
#[derive(Debug, Clone)]
pub struct HBayesScorer {
    pub hp: HyperParams,
    pub seed: u64,
    pub options: FitOptions,
}

impl Scorer for HBayesScorer {
    fn score(&mut self, train: &Dataset, test: &[&EventRecord], fold: usize) -> Result<Vec<f64>> {
        let (state, _) = fit_with(train, &self.hp, fold_seed(self.seed, fold), self.options)?;
        test.iter()
            .map(|e| {
                predictor::score(&e.x, &state.brands[e.brand], &state.users[e.user]).map(|s| s.prob)
            })
            .collect()
    }
}

/// Scores an item by the training click rate of its brand (add-one
/// smoothed); brands without training events get the global rate.
#[derive(Debug, Clone, Copy, Default)]
pub struct PopularityScorer;

impl Scorer for PopularityScorer {
    fn score(&mut self, train: &Dataset, test: &[&EventRecord], _fold: usize) -> Result<Vec<f64>> {
        let mut clicks = vec![0usize; train.num_brands];
        let mut shown = vec![0usize; train.num_brands];
        for e in &train.events {
            shown[e.brand] += 1;
            clicks[e.brand] += e.clicked as usize;
        }
        let total_clicks: usize = clicks.iter().sum();
        let global = (total_clicks as f64 + 1.0) / (train.len() as f64 + 2.0);
        Ok(test
            .iter()
            .map(|e| match shown.get(e.brand) {
                Some(&n) if n > 0 => (clicks[e.brand] as f64 + 1.0) / (n as f64 + 2.0),
                _ => global,
            })
            .collect())
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(fold as u64 + 1)
}

/// Fold label of every event: each eligible user's events are shuffled and
/// dealt round-robin into `folds` parts. Events of users with fewer than
/// `folds` events get `None` and are always used for training.
pub fn stratified_folds(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<Option<usize>>> {
    if folds < 2 {
        return Err(HBayesError::InvalidInput(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![None; data.len()];
    let mut eligible = 0;
    for mut events in data.events_by_user() {
        if events.len() < folds {
            continue;
        }
        eligible += 1;
        events.shuffle(&mut rng);
        for (pos, t) in events.into_iter().enumerate() {
            labels[t] = Some(pos % folds);
        }
    }
    if eligible == 0 {
        return Err(HBayesError::InvalidInput(format!(
            "dataset too small for stratification: no user has at least {folds} events"
        )));
    }
    Ok(labels)
}

/// Ranks each user's held-out events by score (ties by event order) and
/// macro-averages the metrics over users with at least one held-out click.
pub fn evaluate_rankings(
    test_events: &[(usize, &EventRecord)],
    scores: &[f64],
    ks: &[usize],
) -> Vec<MetricReport> {
    let mut per_user: std::collections::BTreeMap<usize, Vec<(usize, f64, bool)>> =
        Default::default();
    for ((t, e), s) in test_events.iter().zip(scores) {
        per_user
            .entry(e.user)
            .or_default()
            .push((*t, *s, e.clicked));
    }
    let mut sums = vec![(0.0, 0.0, 0.0); ks.len()];
    let mut users = 0;
    for (_, mut items) in per_user {
        if !items.iter().any(|(_, _, c)| *c) {
            continue;
        }
        users += 1;
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let ranked: Vec<usize> = items.iter().map(|(t, _, _)| *t).collect();
        let relevant: HashSet<usize> = items
            .iter()
            .filter(|(_, _, c)| *c)
            .map(|(t, _, _)| *t)
            .collect();
        for (slot, &k) in sums.iter_mut().zip(ks) {
            slot.0 += precision_at_k(&ranked, &relevant, k);
            slot.1 += recall_at_k(&ranked, &relevant, k);
            slot.2 += ndcg_at_k(&ranked, &relevant, k);
        }
    }
    let n = users.max(1) as f64;
    ks.iter()
        .zip(sums)
        .map(|(&k, (p, r, g))| MetricReport {
            k,
            precision: p / n,
            recall: r / n,
            ndcg: g / n,
            num_users_evaluated: users,
        })
        .collect()
}

/// Cross-validates an arbitrary scorer.
pub fn cross_validate_with<S: Scorer>(
    data: &Dataset,
    folds: usize,
    seed: u64,
    ks: &[usize],
    scorer: &mut S,
) -> Result<CvReport> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(HBayesError::InvalidInput("cutoffs must be >= 1".into()));
    }
    let labels = stratified_folds(data, folds, seed)?;
    let mut reports = Vec::with_capacity(folds);
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..data.len())
            .filter(|&t| labels[t] != Some(fold))
            .collect();
        let test: Vec<(usize, &EventRecord)> = (0..data.len())
            .filter(|&t| labels[t] == Some(fold))
            .map(|t| (t, &data.events[t]))
            .collect();
        let train = data.subset(&train_idx);
        let test_refs: Vec<&EventRecord> = test.iter().map(|(_, e)| *e).collect();
        let scores = scorer.score(&train, &test_refs, fold)?;
        if scores.len() != test.len() {
            return Err(HBayesError::DimensionMismatch {
                expected: test.len(),
                found: scores.len(),
            });
        }
        reports.push(FoldReport {
            fold,
            metrics: evaluate_rankings(&test, &scores, ks),
        });
    }
    let (mean, std) = summarize(&reports, ks);
    Ok(CvReport {
        folds: reports,
        mean,
        std,
    })
}

/// Cross-validates the hierarchical model itself.
pub fn cross_validate(
    data: &Dataset,
    hp: &HyperParams,
    folds: usize,
    seed: u64,
    ks: &[usize],
) -> Result<CvReport> {
    let mut scorer = HBayesScorer {
        hp: hp.clone(),
        seed,
        options: FitOptions::default(),
    };
    cross_validate_with(data, folds, seed, ks, &mut scorer)
}

fn summarize(reports: &[FoldReport], ks: &[usize]) -> (Vec<MetricReport>, Vec<MetricReport>) {
    let n = reports.len() as f64;
    let mut mean = Vec::with_capacity(ks.len());
    let mut std = Vec::with_capacity(ks.len());
    for (idx, &k) in ks.iter().enumerate() {
        let col = |f: fn(&MetricReport) -> f64| -> (f64, f64) {
            let vals: Vec<f64> = reports.iter().map(|r| f(&r.metrics[idx])).collect();
            let m = vals.iter().sum::<f64>() / n;
            let var = if reports.len() > 1 {
                vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (m, var.sqrt())
        };
        let (pm, ps) = col(|r| r.precision);
        let (rm, rs) = col(|r| r.recall);
        let (nm, ns) = col(|r| r.ndcg);
        let users = reports
            .iter()
            .map(|r| r.metrics[idx].num_users_evaluated)
            .sum::<usize>();
        mean.push(MetricReport {
            k,
            precision: pm,
            recall: rm,
            ndcg: nm,
            num_users_evaluated: users,
        });
        std.push(MetricReport {
            k,
            precision: ps,
            recall: rs,
            ndcg: ns,
            num_users_evaluated: users,
        });
    }
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[char]) -> HashSet<char> {
        items.iter().copied().collect()
    }

    #[test]
    fn precision_examples() {
        assert_eq!(precision_at_k(&['a', 'b'], &set(&['a', 'b', 'c']), 2), 1.0);
        assert_eq!(precision_at_k(&['a', 'b'], &set(&['a', 'c']), 2), 0.5);
        assert_eq!(precision_at_k(&['a', 'b'], &set(&[]), 2), 0.0);
        assert_eq!(precision_at_k::<char>(&[], &set(&['a']), 3), 0.0);
        // denominator is min(K, len)
        assert_eq!(precision_at_k(&['a'], &set(&['a']), 5), 1.0);
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&['a', 'b', 'c'], &set(&['a', 'c']), 10), 1.0);
        assert_eq!(recall_at_k(&['a', 'b', 'c'], &set(&['a', 'c']), 2), 0.5);
        assert_eq!(recall_at_k(&['a', 'b'], &set(&[]), 2), 0.0);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_from_gains(&[1.0, 1.0, 0.0], 3), 1.0);
        let v = ndcg_from_gains(&[1.0, 0.0, 1.0], 3);
        let idcg = 1.0 + 1.0 / 3f64.log2();
        assert!((dcg_at_k(&[1.0, 0.0, 1.0], 3) - 1.5).abs() < 1e-15);
        assert!((v - 1.5 / idcg).abs() < 1e-15);
        assert!((v - 0.91972).abs() < 1e-5);
        assert_eq!(ndcg_from_gains(&[0.0, 0.0], 2), 0.0);
        assert_eq!(ndcg_at_k(&['a', 'b', 'c'], &set(&['a', 'c']), 3), v);
    }

    #[test]
    fn one_fold_is_rejected() {
        let data = Dataset::new(vec![EventRecord::new(vec![0.0], 0, 0, true)], 1, 1, 1).unwrap();
        assert!(stratified_folds(&data, 1, 0).is_err());
        assert!(stratified_folds(&data, 2, 0).is_err());
    }

    #[test]
    fn folds_are_balanced_per_user() {
        let events = (0..23)
            .map(|t| EventRecord::new(vec![0.0], 0, t % 2, t % 3 == 0))
            .collect();
        let data = Dataset::new(events, 2, 1, 1).unwrap();
        let labels = stratified_folds(&data, 5, 1).unwrap();
        for user in 0..2 {
            let mut counts = [0usize; 5];
            for (t, e) in data.events.iter().enumerate() {
                if e.user == user {
                    counts[labels[t].unwrap()] += 1;
                }
            }
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "{counts:?}");
        }
    }

    #[test]
    fn oracle_scorer_is_perfect() {
        let events = (0..60)
            .map(|t| EventRecord::new(vec![t as f64], 0, t % 3, t % 4 == 0))
            .collect();
        let data = Dataset::new(events, 3, 1, 1).unwrap();
        let mut oracle =
            |_: &Dataset, test: &[&EventRecord], _: usize| Ok(test.iter().map(|e| e.y()).collect());
        let report = cross_validate_with(&data, 5, 3, &DEFAULT_KS, &mut oracle).unwrap();
        for m in &report.mean {
            assert_eq!(m.ndcg, 1.0);
        }
    }
}
