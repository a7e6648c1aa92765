//! Synthetic datasets drawn from the hierarchical generative process.
//!
//! `w ~ N(0, δ_w⁻¹ I)`, `S_j ~ N(w, δ_s⁻¹ I)`, `θ ~ Dir(γ0)`,
//! `z_i ~ Mult(θ)`, `B_i ~ N(S_{z_i}, δ_b⁻¹ I)`, `U_k ~ N(0, δ_u⁻¹ I)`, and for
//! every event a uniformly chosen user and brand, `x ~ N(0, s² I)` and
//! `y ~ Bernoulli(σ(x^T (B_b + U_u)))`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{HBayesError, Result};
use crate::model::{sigmoid, Dataset, EventRecord, HyperParams};

/// Precisions used to draw the latents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruePrecisions {
    pub user: f64,
    pub brand: f64,
    pub style: f64,
    pub w: f64,
}

impl Default for TruePrecisions {
    fn default() -> Self {
        TruePrecisions {
            user: 1.0,
            brand: 4.0,
            style: 1.0,
            w: 1.0,
        }
    }
}

/// The latents behind a synthetic dataset. Rows of the matrices are vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub style_vectors: DMatrix<f64>,
    pub brand_vectors: DMatrix<f64>,
    pub user_vectors: DMatrix<f64>,
    pub style_assignments: Vec<usize>,
    pub theta: Vec<f64>,
    pub w: DVector<f64>,
    pub precisions: TruePrecisions,
}

impl GroundTruth {
    pub fn brand(&self, i: usize) -> DVector<f64> {
        self.brand_vectors.row(i).transpose()
    }

    pub fn user(&self, k: usize) -> DVector<f64> {
        self.user_vectors.row(k).transpose()
    }

    pub fn style(&self, j: usize) -> DVector<f64> {
        self.style_vectors.row(j).transpose()
    }
}

/// Sizes and knobs for [`sample_dataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub num_users: usize,
    pub num_brands: usize,
    pub num_events: usize,
    pub precisions: TruePrecisions,
    pub feature_scale: f64,
}

impl GeneratorConfig {
    pub fn new(num_users: usize, num_brands: usize, num_events: usize) -> Self {
        GeneratorConfig {
            num_users,
            num_brands,
            num_events,
            precisions: TruePrecisions::default(),
            feature_scale: 1.0,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, mean: &DVector<f64>, precision: f64) -> DVector<f64> {
    let sd = precision.recip().sqrt();
    DVector::from_iterator(
        mean.len(),
        mean.iter().map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + sd * z
        }),
    )
}

fn dirichlet(rng: &mut ChaCha8Rng, alpha: &[f64]) -> Vec<f64> {
    // Small concentrations can underflow every Gamma draw; retry until one
    // draw survives.
    loop {
        let draws: Vec<f64> = alpha
            .iter()
            .map(|a| {
                Gamma::new(*a, 1.0)
                    .expect("positive concentration")
                    .sample(rng)
            })
            .collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.into_iter().map(|g| g / total).collect();
        }
    }
}

fn categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // round-off: fall back to the last index with positive mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Draws latents and events. Users and brands are renumbered in order of
/// first appearance among the events, so writing the events to a file and
/// loading them back reproduces the same indices.
pub fn sample_dataset(
    hp: &HyperParams,
    config: &GeneratorConfig,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    hp.validate()?;
    let GeneratorConfig {
        num_users,
        num_brands,
        num_events,
        precisions,
        feature_scale,
    } = *config;
    if num_users == 0 || num_brands == 0 || num_events == 0 {
        return Err(HBayesError::InvalidInput(
            "users, brands and events must all be >= 1".into(),
        ));
    }
    for p in [
        precisions.user,
        precisions.brand,
        precisions.style,
        precisions.w,
    ] {
        if !(p.is_finite() && p > 0.0) {
            return Err(HBayesError::InvalidInput(format!(
                "precision {p} must be > 0"
            )));
        }
    }
    if !(feature_scale.is_finite() && feature_scale >= 0.0) {
        return Err(HBayesError::InvalidInput(
            "feature_scale must be >= 0".into(),
        ));
    }

    let d = hp.feature_dim;
    let s = hp.num_styles;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = DVector::zeros(d);

    let w = gaussian(&mut rng, &zero, precisions.w);
    let styles: Vec<DVector<f64>> = (0..s)
        .map(|_| gaussian(&mut rng, &w, precisions.style))
        .collect();
    let theta = dirichlet(&mut rng, &hp.gamma0);
    let mut assignments = Vec::with_capacity(num_brands);
    let mut brands = Vec::with_capacity(num_brands);
    for _ in 0..num_brands {
        let z = categorical(&mut rng, &theta);
        assignments.push(z);
        brands.push(gaussian(&mut rng, &styles[z], precisions.brand));
    }
    let users: Vec<DVector<f64>> = (0..num_users)
        .map(|_| gaussian(&mut rng, &zero, precisions.user))
        .collect();

    let mut truth = GroundTruth {
        style_vectors: rows_to_matrix(&styles, d),
        brand_vectors: rows_to_matrix(&brands, d),
        user_vectors: rows_to_matrix(&users, d),
        style_assignments: assignments,
        theta,
        w,
        precisions,
    };
    let events = sample_events(&truth, num_events, feature_scale, &mut rng);
    let events = relabel_first_seen(&mut truth, events);
    let data = Dataset::new(events, num_users, num_brands, d)?;
    Ok((data, truth))
}

/// Draws events for fixed latents.
pub fn sample_events<R: Rng + ?Sized>(
    truth: &GroundTruth,
    num_events: usize,
    feature_scale: f64,
    rng: &mut R,
) -> Vec<EventRecord> {
    let d = truth.w.len();
    let num_users = truth.user_vectors.nrows();
    let num_brands = truth.brand_vectors.nrows();
    (0..num_events)
        .map(|_| {
            let user = rng.random_range(0..num_users);
            let brand = rng.random_range(0..num_brands);
            let x = DVector::from_iterator(
                d,
                (0..d).map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    feature_scale * z
                }),
            );
            let h = x.dot(&truth.brand_vectors.row(brand).transpose())
                + x.dot(&truth.user_vectors.row(user).transpose());
            let clicked = rng.random::<f64>() < sigmoid(h);
            EventRecord {
                x,
                brand,
                user,
                clicked,
            }
        })
        .collect()
}

fn rows_to_matrix(rows: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c])
}

fn first_seen_order(ids: impl Iterator<Item = usize>, n: usize) -> Vec<usize> {
    let mut new_of_old = vec![usize::MAX; n];
    let mut next = 0;
    for id in ids {
        if new_of_old[id] == usize::MAX {
            new_of_old[id] = next;
            next += 1;
        }
    }
    // entities that never appear keep their relative order at the end
    for slot in new_of_old.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    new_of_old
}

fn permute_rows(m: &DMatrix<f64>, new_of_old: &[usize]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (old, &new) in new_of_old.iter().enumerate() {
        out.set_row(new, &m.row(old));
    }
    out
}

fn relabel_first_seen(truth: &mut GroundTruth, mut events: Vec<EventRecord>) -> Vec<EventRecord> {
    let users = first_seen_order(events.iter().map(|e| e.user), truth.user_vectors.nrows());
    let brands = first_seen_order(events.iter().map(|e| e.brand), truth.brand_vectors.nrows());
    truth.user_vectors = permute_rows(&truth.user_vectors, &users);
    truth.brand_vectors = permute_rows(&truth.brand_vectors, &brands);
    let mut assignments = vec![0; brands.len()];
    for (old, &new) in brands.iter().enumerate() {
        assignments[new] = truth.style_assignments[old];
    }
    truth.style_assignments = assignments;
    for e in events.iter_mut() {
        e.user = users[e.user];
        e.brand = brands[e.brand];
    }
    events
}
