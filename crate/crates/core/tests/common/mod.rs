#![allow(dead_code)]

use std::collections::HashSet;

use hbayes::generator::{sample_dataset, GeneratorConfig, GroundTruth};
use hbayes::{
    Dataset, GammaPosterior, GaussianPosterior, HyperParams, Responsibilities, VariationalState,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Adjusted Rand index between two labelings of the same items.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let comb2 = |n: usize| (n * n.saturating_sub(1)) as f64 / 2.0;
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (x, y) in a.iter().zip(b) {
        table[*x][*y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&n| comb2(n)).sum();
    let rows: f64 = table.iter().map(|r| comb2(r.iter().sum())).sum();
    let cols: f64 = (0..kb)
        .map(|j| comb2(table.iter().map(|r| r[j]).sum()))
        .sum();
    let expected = rows * cols / comb2(a.len());
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Generator data for the monotonicity and lift checks.
pub fn medium_dataset(seed: u64) -> (Dataset, HyperParams) {
    let hp = HyperParams::new(3, 10);
    let (data, _) = sample_dataset(&hp, &GeneratorConfig::new(20, 15, 2000), seed).unwrap();
    (data, hp)
}

/// Data whose true style means are pairwise at least `5 / sqrt(δ_b)` apart.
/// Seeds are scanned upward from `first_seed`; returns `count` cases.
pub fn separated_style_cases(first_seed: u64, count: usize) -> Vec<(u64, Dataset, GroundTruth)> {
    let s = 3;
    let mut generating = HyperParams::new(s, 5);
    generating.gamma0 = vec![10.0; s];
    let mut config = GeneratorConfig::new(30, 30, 6000);
    config.feature_scale = 0.5;
    config.precisions.brand = 4.0;
    config.precisions.style = 0.25;
    let min_gap = 5.0 / config.precisions.brand.sqrt();

    let mut out = Vec::new();
    let mut seed = first_seed;
    while out.len() < count {
        let (data, truth) = sample_dataset(&generating, &config, seed).unwrap();
        let separated =
            (0..s).all(|a| (0..a).all(|b| (truth.style(a) - truth.style(b)).norm() >= min_gap));
        if separated {
            out.push((seed, data, truth));
        }
        seed += 1;
    }
    out
}

pub fn brute_precision(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> f64 {
    if ranked.is_empty() {
        return 0.0;
    }
    let mut hits = 0;
    for (pos, item) in ranked.iter().enumerate() {
        if pos < k && relevant.contains(item) {
            hits += 1;
        }
    }
    hits as f64 / k.min(ranked.len()) as f64
}

pub fn brute_recall(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let hits = ranked[..k.min(ranked.len())]
        .iter()
        .filter(|i| relevant.contains(i))
        .count();
    hits as f64 / relevant.len() as f64
}

/// Enumerates positions, sorts gains explicitly for the ideal ordering.
pub fn brute_ndcg(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> f64 {
    let gains: Vec<f64> = ranked
        .iter()
        .map(|i| if relevant.contains(i) { 1.0 } else { 0.0 })
        .collect();
    let dcg = |g: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 1..=k.min(g.len()) {
            total += g[i - 1] / ((i + 1) as f64).log2();
        }
        total
    };
    let mut ideal = gains.clone();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        0.0
    } else {
        dcg(&gains) / idcg
    }
}

pub fn normal_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

pub fn random_spd(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z
    });
    let m = &a * a.transpose() * (scale / d as f64) + DMatrix::identity(d, d) * (0.1 * scale);
    (&m + m.transpose()) * 0.5
}

fn random_simplex(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..s).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

/// A valid state with every factor randomised.
pub fn random_state(rng: &mut ChaCha8Rng, data: &Dataset, s: usize) -> VariationalState {
    let d = data.feature_dim;
    let gauss = |rng: &mut ChaCha8Rng| {
        let mean = normal_vec(rng, d, 1.0);
        let cov = random_spd(rng, d, 0.5);
        GaussianPosterior::full(mean, cov)
    };
    let gamma = |rng: &mut ChaCha8Rng| GammaPosterior {
        shape: rng.random_range(2.0..6.0),
        rate: rng.random_range(1.0..3.0),
    };
    let mut mu = DMatrix::zeros(data.num_brands, s);
    for i in 0..data.num_brands {
        for (j, p) in random_simplex(rng, s).into_iter().enumerate() {
            mu[(i, j)] = p;
        }
    }
    VariationalState {
        users: (0..data.num_users).map(|_| gauss(rng)).collect(),
        brands: (0..data.num_brands).map(|_| gauss(rng)).collect(),
        styles: (0..s)
            .map(|_| {
                GaussianPosterior::isotropic(normal_vec(rng, d, 1.0), rng.random_range(0.1..0.8))
            })
            .collect(),
        w: GaussianPosterior::isotropic(normal_vec(rng, d, 1.0), rng.random_range(0.1..0.8)),
        theta_gamma: (0..s).map(|_| rng.random_range(0.5..4.0)).collect(),
        resp: Responsibilities { mu },
        prec_u: gamma(rng),
        prec_b: gamma(rng),
        prec_s: gamma(rng),
        prec_w: gamma(rng),
        xi: (0..data.len())
            .map(|_| rng.random_range(0.1..3.0))
            .collect(),
    }
}

/// Small dataset with every user and brand present.
pub fn tiny_dataset(
    rng: &mut ChaCha8Rng,
    users: usize,
    brands: usize,
    d: usize,
    n: usize,
) -> Dataset {
    let events = (0..n)
        .map(|t| {
            hbayes::EventRecord::new(
                normal_vec(rng, d, 1.0).as_slice().to_vec(),
                t % brands,
                t % users,
                rng.random::<bool>(),
            )
        })
        .collect();
    Dataset::new(events, users, brands, d).unwrap()
}

/// Draws from `N(mean, cov)`.
pub fn sample_gaussian(rng: &mut ChaCha8Rng, g: &GaussianPosterior) -> DVector<f64> {
    let l = g.covariance_matrix().cholesky().expect("SPD").l();
    &g.mean + l * normal_vec(rng, g.dim(), 1.0)
}

/// `ln N(x; mean, cov)`.
pub fn gaussian_log_pdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = x.len() as f64;
    let chol = cov.clone().cholesky().expect("SPD");
    let diff = x - mean;
    let solved = chol.solve(&diff);
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det + diff.dot(&solved))
}

pub fn isotropic_log_pdf(x: &DVector<f64>, mean: &DVector<f64>, precision: f64) -> f64 {
    let d = x.len() as f64;
    0.5 * d * (precision / (2.0 * std::f64::consts::PI)).ln()
        - 0.5 * precision * (x - mean).norm_squared()
}

/// Sample mean and standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `E[σ(h)]` for `h ~ N(mu, sigma2)` by simple Monte Carlo.
pub fn mc_expected_sigmoid(rng: &mut ChaCha8Rng, mu: f64, sigma2: f64, n: usize) -> f64 {
    let sd = sigma2.sqrt();
    let mut total = 0.0;
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        total += 1.0 / (1.0 + (-(mu + sd * z)).exp());
    }
    total / n as f64
}
