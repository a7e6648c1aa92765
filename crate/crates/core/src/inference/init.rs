//! Starting points for the fitting loop.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

use super::{
    sweep, update_precisions, update_style, update_theta, update_w, FitOptions, SweepIndex,
};
use crate::error::{HBayesError, Result};
use crate::model::{
    elbo, Dataset, GaussianPosterior, HyperParams, Responsibilities, VariationalState,
};

const INIT_LATENT_SCALE: f64 = 0.01;
const INIT_STYLE_SCALE: f64 = 0.1;
const INIT_RESP_JITTER: f64 = 0.1;
const KMEANS_ITERS: usize = 50;
const KMEANS_RESTARTS: usize = 10;
const HARD_LABEL_SMOOTHING: f64 = 0.01;
const STYLE_BLOCK_ITERS: usize = 50;

/// How [`initialize_with`] builds the first state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Small random means, near-uniform responsibilities, priors elsewhere.
    Random,
    /// Fits a single-style model from the random start for at most `sweeps`
    /// sweeps (stopping early at `rel_tol`), clusters the learned brand means
    /// with k-means++ and starts the styles and responsibilities from the
    /// clusters.
    WarmStart { sweeps: usize },
}

impl Default for InitStrategy {
    fn default() -> Self {
        InitStrategy::WarmStart { sweeps: 100 }
    }
}

fn check(data: &Dataset, hp: &HyperParams) -> Result<()> {
    hp.validate()?;
    if data.feature_dim != hp.feature_dim {
        return Err(HBayesError::DimensionMismatch {
            expected: hp.feature_dim,
            found: data.feature_dim,
        });
    }
    Ok(())
}

/// Random start: user and brand means with scale 0.01, style means with scale
/// 0.1, uniform responsibility rows mixed with a little Dirichlet(1) noise,
/// the Dirichlet and Gamma factors at their priors and ξ = 1.
pub fn initialize_random(data: &Dataset, hp: &HyperParams, seed: u64) -> Result<VariationalState> {
    check(data, hp)?;
    let d = hp.feature_dim;
    let s = hp.num_styles;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |scale: f64, rng: &mut ChaCha8Rng| -> DVector<f64> {
        let normal = Normal::new(0.0, scale).expect("positive scale");
        DVector::from_iterator(d, (0..d).map(|_| normal.sample(rng)))
    };
    let identity = DMatrix::<f64>::identity(d, d);

    let users = (0..data.num_users)
        .map(|_| GaussianPosterior::full(draw(INIT_LATENT_SCALE, &mut rng), identity.clone()))
        .collect();
    let brands = (0..data.num_brands)
        .map(|_| GaussianPosterior::full(draw(INIT_LATENT_SCALE, &mut rng), identity.clone()))
        .collect();
    let styles = (0..s)
        .map(|_| GaussianPosterior::isotropic(draw(INIT_STYLE_SCALE, &mut rng), 1.0))
        .collect();

    let mut resp = Responsibilities::uniform(data.num_brands, s);
    for i in 0..data.num_brands {
        let noise: Vec<f64> = (0..s).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = noise.iter().sum();
        for (j, n) in noise.iter().enumerate() {
            resp.mu[(i, j)] = (1.0 - INIT_RESP_JITTER) / s as f64 + INIT_RESP_JITTER * n / total;
        }
        let row_sum: f64 = resp.mu.row(i).sum();
        for j in 0..s {
            resp.mu[(i, j)] /= row_sum;
        }
    }

    let prior = hp.precision_prior();
    Ok(VariationalState {
        users,
        brands,
        styles,
        w: GaussianPosterior::isotropic(DVector::zeros(d), 1.0),
        theta_gamma: hp.gamma0.clone(),
        resp,
        prec_u: prior,
        prec_b: prior,
        prec_s: prior,
        prec_w: prior,
        xi: vec![1.0; data.len()],
    })
}

/// Seeded initial state for [`super::fit`].
pub fn initialize(data: &Dataset, hp: &HyperParams, seed: u64) -> Result<VariationalState> {
    initialize_with(data, hp, seed, InitStrategy::default())
}

pub fn initialize_with(
    data: &Dataset,
    hp: &HyperParams,
    seed: u64,
    strategy: InitStrategy,
) -> Result<VariationalState> {
    match strategy {
        InitStrategy::Random => initialize_random(data, hp, seed),
        InitStrategy::WarmStart { sweeps } => warm_start(data, hp, seed, sweeps),
    }
}

fn warm_start(
    data: &Dataset,
    hp: &HyperParams,
    seed: u64,
    sweeps: usize,
) -> Result<VariationalState> {
    check(data, hp)?;
    let mut single = hp.clone();
    single.num_styles = 1;
    single.gamma0 = vec![hp.gamma0.iter().sum()];
    let mut state = initialize_random(data, &single, seed)?;
    let index = SweepIndex::new(data);
    let mut previous = elbo(&state, data, &single)?;
    for _ in 0..sweeps {
        sweep(&mut state, data, &single, &index, FitOptions::default())?;
        let current = elbo(&state, data, &single)?;
        if (current - previous).abs() / (previous.abs() + 1e-12) < hp.rel_tol {
            break;
        }
        previous = current;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c1a5_7e25_0000);
    let points: Vec<&DVector<f64>> = state.brands.iter().map(|b| &b.mean).collect();
    let (centers, labels) = kmeans(&points, hp.num_styles, &mut rng, &state.styles[0].mean);
    state.styles = centers
        .into_iter()
        .map(|c| GaussianPosterior::isotropic(c, 1.0))
        .collect();

    // Near one-hot responsibilities from the clustering. The style, w and
    // precision factors are then refitted to them with brands and users
    // held fixed, so the first sweep sees a brand precision that matches the
    // within-cluster spread.
    let s = hp.num_styles;
    let mut resp = Responsibilities::uniform(data.num_brands, s);
    for (i, &l) in labels.iter().enumerate() {
        for j in 0..s {
            resp.mu[(i, j)] = if j == l {
                1.0 - HARD_LABEL_SMOOTHING
            } else {
                HARD_LABEL_SMOOTHING / (s - 1) as f64
            };
        }
    }
    if s == 1 {
        resp = Responsibilities::uniform(data.num_brands, 1);
    }
    state.theta_gamma = update_theta(&resp, hp);
    state.resp = resp;
    for _ in 0..STYLE_BLOCK_ITERS {
        state.styles = (0..s).map(|j| update_style(j, &state)).collect();
        state.w = update_w(&state);
        let p = update_precisions(&state, hp);
        state.prec_u = p.user;
        state.prec_b = p.brand;
        state.prec_s = p.style;
        state.prec_w = p.w;
    }
    Ok(state)
}

/// Best of several k-means++ runs by within-cluster sum of squares. Returns
/// the centers and each point's cluster. With fewer distinct points than
/// clusters the spare centers sit at `fallback`.
fn kmeans(
    points: &[&DVector<f64>],
    k: usize,
    rng: &mut ChaCha8Rng,
    fallback: &DVector<f64>,
) -> (Vec<DVector<f64>>, Vec<usize>) {
    if points.is_empty() {
        return (vec![fallback.clone(); k], Vec::new());
    }
    let mut best: Option<(f64, Vec<DVector<f64>>, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (centers, labels) = lloyd(points, k, rng, fallback);
        let inertia: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| (*p - &centers[l]).norm_squared())
            .sum();
        if best.as_ref().is_none_or(|b| inertia < b.0) {
            best = Some((inertia, centers, labels));
        }
    }
    let (_, centers, labels) = best.expect("at least one restart");
    (centers, labels)
}

fn lloyd(
    points: &[&DVector<f64>],
    k: usize,
    rng: &mut ChaCha8Rng,
    fallback: &DVector<f64>,
) -> (Vec<DVector<f64>>, Vec<usize>) {
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].clone());
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| (*p - c).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            centers.push(fallback.clone());
            continue;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, w) in d2.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        centers.push(points[pick].clone());
    }

    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..=KMEANS_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let dist = (*p - c).norm_squared();
                if dist < best_d {
                    best_d = dist;
                    best = j;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (j, c) in centers.iter_mut().enumerate() {
            let members: Vec<&&DVector<f64>> = points
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == j)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut sum = DVector::zeros(c.len());
            for m in &members {
                sum += **m;
            }
            *c = sum / members.len() as f64;
        }
    }
    (centers, labels)
}
