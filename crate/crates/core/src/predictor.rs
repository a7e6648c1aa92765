//! Predictive click probabilities and top-K ranking from a fitted state.

use std::cmp::Ordering;

use nalgebra::DVector;

use crate::error::{HBayesError, Result};
use crate::model::{sigmoid, Covariance, GaussianPosterior, VariationalState};

/// Predictive summary of `h = x^T (B + U)` for one (user, item) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionScore {
    pub mu: f64,
    pub sigma2: f64,
    pub prob: f64,
}

/// Mean and variance of `x^T (B + U)`; the cross term vanishes because the
/// brand and user factors are independent.
pub fn predictive_moments(
    x: &DVector<f64>,
    brand: &GaussianPosterior,
    user: &GaussianPosterior,
) -> Result<(f64, f64)> {
    for g in [brand, user] {
        if g.dim() != x.len() {
            return Err(HBayesError::DimensionMismatch {
                expected: x.len(),
                found: g.dim(),
            });
        }
    }
    let mu = x.dot(&brand.mean) + x.dot(&user.mean);
    let sigma2 = brand.quad_form(x) + user.quad_form(x);
    Ok((mu, sigma2.max(0.0)))
}

/// `σ(μ / sqrt(1 + π σ² / 8))`, the probit-matched approximation of
/// `∫ σ(h) N(h; μ, σ²) dh`.
pub fn predict_prob(mu: f64, sigma2: f64) -> Result<f64> {
    if sigma2.is_nan() || sigma2 < 0.0 {
        return Err(HBayesError::InvalidInput(format!(
            "predictive variance {sigma2} must be >= 0"
        )));
    }
    let kappa = (1.0 + std::f64::consts::PI * sigma2 / 8.0).sqrt();
    Ok(sigmoid(mu / kappa))
}

pub fn score(
    x: &DVector<f64>,
    brand: &GaussianPosterior,
    user: &GaussianPosterior,
) -> Result<PredictionScore> {
    let (mu, sigma2) = predictive_moments(x, brand, user)?;
    Ok(PredictionScore {
        mu,
        sigma2,
        prob: predict_prob(mu, sigma2)?,
    })
}

/// Brand factor for a brand unseen in training: the style mixture under the
/// expected style proportions, with the brand precision's posterior mean.
pub fn brand_prior(state: &VariationalState) -> GaussianPosterior {
    let d = state.feature_dim();
    let total: f64 = state.theta_gamma.iter().sum();
    let mut mean = DVector::zeros(d);
    let mut cov = nalgebra::DMatrix::identity(d, d) * state.prec_b.mean().recip();
    for (g, style) in state.theta_gamma.iter().zip(&state.styles) {
        let weight = g / total;
        mean.axpy(weight, &style.mean, 1.0);
        match &style.covariance {
            Covariance::Isotropic(s) => {
                for r in 0..d {
                    cov[(r, r)] += weight * s;
                }
            }
            Covariance::Full(m) => cov += m * weight,
        }
    }
    GaussianPosterior::full(mean, cov)
}

/// User factor for a user unseen in training.
pub fn user_prior(state: &VariationalState) -> GaussianPosterior {
    GaussianPosterior::isotropic(
        DVector::zeros(state.feature_dim()),
        state.prec_u.mean().recip(),
    )
}

/// One item offered to a user.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub item_id: usize,
    pub x: DVector<f64>,
    /// Brand index; indices outside the fitted brands use the brand prior.
    pub brand: usize,
}

/// Scores each candidate for `user` and returns the `k` most probable
/// clicks, highest first; equal probabilities are ordered by ascending
/// `item_id`. A `user` index outside the fitted users is scored with the user
/// prior.
pub fn rank_top_k(
    user: usize,
    candidates: &[Candidate],
    state: &VariationalState,
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    if k == 0 {
        return Err(HBayesError::InvalidInput("k must be >= 1".into()));
    }
    let cold_user;
    let user_post = match state.users.get(user) {
        Some(u) => u,
        None => {
            cold_user = user_prior(state);
            &cold_user
        }
    };
    let mut cold_brand: Option<GaussianPosterior> = None;
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let brand_post = match state.brands.get(c.brand) {
            Some(b) => b,
            None => cold_brand.get_or_insert_with(|| brand_prior(state)),
        };
        let s = score(&c.x, brand_post, user_post)?;
        scored.push((c.item_id, s.prob));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    scored.truncate(k);
    Ok(scored)
}
