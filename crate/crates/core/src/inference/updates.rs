//! Closed-form coordinate updates. Each returns the optimal factor given all
//! other factors in `state`; none of them mutate the state.

use nalgebra::{DMatrix, DVector};

use crate::error::{HBayesError, Result};
use crate::linalg::spd_inverse;
use crate::model::{
    event_moments, expected_sq_distance, lambda_of_xi, Dataset, GammaPosterior, GaussianPosterior,
    HyperParams, Responsibilities, VariationalState,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `q(z_i)` for every brand via a row-wise log-sum-exp.
pub fn update_responsibilities(
    state: &VariationalState,
    _data: &Dataset,
    hp: &HyperParams,
) -> Result<Responsibilities> {
    let s = hp.num_styles;
    let d = state.feature_dim() as f64;
    let elog_theta = state.expected_log_theta();
    let eb = state.prec_b.mean();
    let common = 0.5 * d * (state.prec_b.mean_log() - LN_2PI);

    let mut mu = DMatrix::zeros(state.num_brands(), s);
    let mut log_rho = vec![0.0; s];
    for (i, brand) in state.brands.iter().enumerate() {
        for (j, style) in state.styles.iter().enumerate() {
            log_rho[j] = elog_theta[j] + common - 0.5 * eb * expected_sq_distance(brand, style);
        }
        let max = log_rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = log_rho.iter().map(|v| (v - max).exp()).sum();
        let lse = max + norm.ln();
        if !lse.is_finite() {
            return Err(HBayesError::numerical(format!(
                "non-finite responsibility normaliser for brand {i}"
            )));
        }
        for j in 0..s {
            mu[(i, j)] = (log_rho[j] - lse).exp();
        }
        // exact renormalisation keeps rows summing to one after exp round-off
        let row_sum: f64 = mu.row(i).sum();
        for j in 0..s {
            mu[(i, j)] /= row_sum;
        }
    }
    Ok(Responsibilities { mu })
}

/// Dirichlet posterior `γ0_j + Σ_i μ_ij`, always rebuilt from the prior.
pub fn update_theta(resp: &Responsibilities, hp: &HyperParams) -> Vec<f64> {
    resp.style_weights()
        .iter()
        .zip(&hp.gamma0)
        .map(|(w, g)| g + w)
        .collect()
}

/// Gaussian factor from a prior precision `prior_prec * I` with linear term
/// `prior_lin`, plus bounded-likelihood contributions of `events` where the
/// other additive factor of `h_t` has mean `other_mean(t)`.
fn gaussian_from_events<'a>(
    prior_prec: f64,
    prior_lin: DVector<f64>,
    events: &[usize],
    state: &VariationalState,
    data: &Dataset,
    other_mean: impl Fn(usize) -> &'a DVector<f64>,
) -> Result<GaussianPosterior> {
    let d = data.feature_dim;
    let mut precision = DMatrix::identity(d, d) * prior_prec;
    let mut lin = prior_lin;
    for &t in events {
        let e = &data.events[t];
        let two_lambda = 2.0 * lambda_of_xi(state.xi[t]);
        precision.ger(two_lambda, &e.x, &e.x, 1.0);
        let coef = e.y() - 0.5 - two_lambda * e.x.dot(other_mean(t));
        lin.axpy(coef, &e.x, 1.0);
    }
    let covariance = spd_inverse(&precision)?;
    let mean = &covariance * lin;
    Ok(GaussianPosterior::full(mean, covariance))
}

pub(crate) fn user_posterior(
    k: usize,
    events: &[usize],
    state: &VariationalState,
    data: &Dataset,
) -> Result<GaussianPosterior> {
    gaussian_from_events(
        state.prec_u.mean(),
        DVector::zeros(data.feature_dim),
        events,
        state,
        data,
        |t| &state.brands[data.events[t].brand].mean,
    )
    .map_err(|e| annotate(e, "user", k))
}

pub(crate) fn brand_posterior(
    i: usize,
    events: &[usize],
    state: &VariationalState,
    data: &Dataset,
) -> Result<GaussianPosterior> {
    let eb = state.prec_b.mean();
    let row = state.resp.mu.row(i);
    let weight: f64 = row.sum();
    let mut prior_lin = DVector::zeros(data.feature_dim);
    for (j, style) in state.styles.iter().enumerate() {
        prior_lin.axpy(eb * row[j], &style.mean, 1.0);
    }
    gaussian_from_events(eb * weight, prior_lin, events, state, data, |t| {
        &state.users[data.events[t].user].mean
    })
    .map_err(|e| annotate(e, "brand", i))
}

fn annotate(e: HBayesError, what: &str, idx: usize) -> HBayesError {
    match e {
        HBayesError::Numerical { message, iteration } => HBayesError::Numerical {
            message: format!("{what} {idx}: {message}"),
            iteration,
        },
        other => other,
    }
}

/// `q(U_k)`; scans the dataset for the user's events.
pub fn update_user(
    k: usize,
    state: &VariationalState,
    data: &Dataset,
) -> Result<GaussianPosterior> {
    check_index(k, state.num_users(), "user")?;
    let events: Vec<usize> = (0..data.len())
        .filter(|&t| data.events[t].user == k)
        .collect();
    user_posterior(k, &events, state, data)
}

/// `q(B_i)`; the prior mean is the responsibility-weighted style mean.
pub fn update_brand(
    i: usize,
    state: &VariationalState,
    data: &Dataset,
) -> Result<GaussianPosterior> {
    check_index(i, state.num_brands(), "brand")?;
    let events: Vec<usize> = (0..data.len())
        .filter(|&t| data.events[t].brand == i)
        .collect();
    brand_posterior(i, &events, state, data)
}

fn check_index(idx: usize, len: usize, what: &str) -> Result<()> {
    if idx >= len {
        return Err(HBayesError::InvalidInput(format!(
            "{what} index {idx} out of range (have {len})"
        )));
    }
    Ok(())
}

/// Isotropic `q(S_j)`.
pub fn update_style(j: usize, state: &VariationalState) -> GaussianPosterior {
    let es = state.prec_s.mean();
    let eb = state.prec_b.mean();
    let col = state.resp.mu.column(j);
    let weight: f64 = col.sum();
    let scale = 1.0 / (es + eb * weight);
    let mut lin = &state.w.mean * es;
    for (i, brand) in state.brands.iter().enumerate() {
        lin.axpy(eb * col[i], &brand.mean, 1.0);
    }
    GaussianPosterior::isotropic(lin * scale, scale)
}

/// Isotropic `q(w)`.
pub fn update_w(state: &VariationalState) -> GaussianPosterior {
    let es = state.prec_s.mean();
    let scale = 1.0 / (state.prec_w.mean() + es * state.num_styles() as f64);
    let mut sum = DVector::zeros(state.feature_dim());
    for style in &state.styles {
        sum += &style.mean;
    }
    GaussianPosterior::isotropic(sum * (es * scale), scale)
}

/// The four Gamma factors over the precisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionPosteriors {
    pub user: GammaPosterior,
    pub brand: GammaPosterior,
    pub style: GammaPosterior,
    pub w: GammaPosterior,
}

/// Prior shape/rate plus sufficient statistics, rebuilt from the prior.
pub fn update_precisions(state: &VariationalState, hp: &HyperParams) -> PrecisionPosteriors {
    let d = state.feature_dim() as f64;
    let post = |count: f64, sq: f64| GammaPosterior {
        shape: hp.alpha0 + 0.5 * d * count,
        rate: hp.beta0 + 0.5 * sq,
    };

    let user_sq: f64 = state.users.iter().map(|u| u.second_moment()).sum();
    let mut brand_sq = 0.0;
    for (i, brand) in state.brands.iter().enumerate() {
        for (j, style) in state.styles.iter().enumerate() {
            let mu = state.resp.mu[(i, j)];
            if mu > 0.0 {
                brand_sq += mu * expected_sq_distance(brand, style);
            }
        }
    }
    let style_sq: f64 = state
        .styles
        .iter()
        .map(|s| expected_sq_distance(s, &state.w))
        .sum();

    PrecisionPosteriors {
        user: post(state.num_users() as f64, user_sq),
        // Σ_ij μ_ij = B
        brand: post(state.resp.mu.sum(), brand_sq),
        style: post(state.num_styles() as f64, style_sq),
        w: post(1.0, state.w.second_moment()),
    }
}

/// `ξ_t = sqrt(E[h_t²])`.
pub fn update_xi(state: &VariationalState, data: &Dataset) -> Vec<f64> {
    data.events.iter().map(|e| xi_for_event(state, e)).collect()
}

pub(crate) fn xi_for_event(state: &VariationalState, e: &crate::model::EventRecord) -> f64 {
    let (_, eh2) = event_moments(&e.x, &state.brands[e.brand], &state.users[e.user]);
    eh2.max(0.0).sqrt()
}
