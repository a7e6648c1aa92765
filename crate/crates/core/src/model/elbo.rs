//! Closed-form evidence lower bound of the ξ-bounded joint.
//!
//! See `docs/elbo.md` for the term-by-term derivation. All expectations are
//! under the mean-field posterior, so expectations of products of distinct
//! factors split into products of expectations.

use statrs::function::gamma::ln_gamma;

use super::bound::{lambda_of_xi, log_sigmoid};
use super::types::{Dataset, GaussianPosterior, HyperParams, VariationalState};
use crate::error::{HBayesError, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// The ELBO split into expected log-joint pieces and factor entropies.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ElboTerms {
    /// `Σ_t E[ln p_ξ(y_t | X_t, B, U)]`
    pub events: f64,
    /// `Σ_i Σ_j μ_ij E[ln N(B_i; S_j, δ_b⁻¹ I)]`
    pub brands: f64,
    /// `Σ_i Σ_j μ_ij E[ln θ_j]`
    pub assignments: f64,
    /// `Σ_j E[ln N(S_j; w, δ_s⁻¹ I)]`
    pub styles: f64,
    /// `E[ln Dir(θ; γ0)]`
    pub theta: f64,
    /// `Σ_k E[ln N(U_k; 0, δ_u⁻¹ I)]`
    pub users: f64,
    /// `E[ln N(w; 0, δ_w⁻¹ I)]`
    pub w: f64,
    /// `Σ_* E[ln Gamma(δ_*; α0, β0)]`
    pub precisions: f64,
    pub entropy_users: f64,
    pub entropy_brands: f64,
    pub entropy_styles: f64,
    pub entropy_w: f64,
    pub entropy_theta: f64,
    pub entropy_assignments: f64,
    pub entropy_precisions: f64,
}

impl ElboTerms {
    pub fn expected_log_joint(&self) -> f64 {
        self.events
            + self.brands
            + self.assignments
            + self.styles
            + self.theta
            + self.users
            + self.w
            + self.precisions
    }

    pub fn entropy(&self) -> f64 {
        self.entropy_users
            + self.entropy_brands
            + self.entropy_styles
            + self.entropy_w
            + self.entropy_theta
            + self.entropy_assignments
            + self.entropy_precisions
    }

    pub fn total(&self) -> f64 {
        self.expected_log_joint() + self.entropy()
    }
}

/// Evidence lower bound of the ξ-bounded joint under `state`.
pub fn elbo(state: &VariationalState, data: &Dataset, hp: &HyperParams) -> Result<f64> {
    Ok(elbo_terms(state, data, hp)?.total())
}

/// `E[(a − b)^T (a − b)]` for independent Gaussian factors.
pub(crate) fn expected_sq_distance(a: &GaussianPosterior, b: &GaussianPosterior) -> f64 {
    (&a.mean - &b.mean).norm_squared() + a.trace() + b.trace()
}

/// `E[h_t]` and `E[h_t²]` for `h_t = x^T (B + U)`.
pub(crate) fn event_moments(
    x: &nalgebra::DVector<f64>,
    brand: &GaussianPosterior,
    user: &GaussianPosterior,
) -> (f64, f64) {
    let mean = x.dot(&brand.mean) + x.dot(&user.mean);
    let var = brand.quad_form(x) + user.quad_form(x);
    (mean, mean * mean + var)
}

/// `E[ln N(a; b, δ⁻¹ I)]` given the second moment of `a − b`.
fn expected_isotropic_log_density(d: f64, mean_log_prec: f64, mean_prec: f64, sq: f64) -> f64 {
    0.5 * d * (mean_log_prec - LN_2PI) - 0.5 * mean_prec * sq
}

fn ln_dirichlet_norm(alpha: &[f64]) -> f64 {
    ln_gamma(alpha.iter().sum()) - alpha.iter().map(|a| ln_gamma(*a)).sum::<f64>()
}

pub fn elbo_terms(state: &VariationalState, data: &Dataset, hp: &HyperParams) -> Result<ElboTerms> {
    state.check_against(data)?;
    if state.num_styles() != hp.num_styles || hp.gamma0.len() != state.num_styles() {
        return Err(HBayesError::InvalidInput(format!(
            "state has {} styles, hyper-parameters declare {}",
            state.num_styles(),
            hp.num_styles
        )));
    }
    let d = state.feature_dim() as f64;
    let mut t = ElboTerms::default();

    for (e, &xi) in data.events.iter().zip(&state.xi) {
        let (eh, eh2) = event_moments(&e.x, &state.brands[e.brand], &state.users[e.user]);
        t.events +=
            log_sigmoid(xi) + (e.y() - 0.5) * eh - 0.5 * xi - lambda_of_xi(xi) * (eh2 - xi * xi);
    }

    let (eb, elb) = (state.prec_b.mean(), state.prec_b.mean_log());
    for (i, brand) in state.brands.iter().enumerate() {
        for (j, style) in state.styles.iter().enumerate() {
            let mu = state.resp.mu[(i, j)];
            if mu > 0.0 {
                t.brands += mu
                    * expected_isotropic_log_density(
                        d,
                        elb,
                        eb,
                        expected_sq_distance(brand, style),
                    );
            }
        }
    }

    let elog_theta = state.expected_log_theta();
    for i in 0..state.num_brands() {
        for (j, elt) in elog_theta.iter().enumerate() {
            let mu = state.resp.mu[(i, j)];
            t.assignments += mu * elt;
            if mu > 0.0 {
                t.entropy_assignments -= mu * mu.ln();
            }
        }
    }

    let (es, els) = (state.prec_s.mean(), state.prec_s.mean_log());
    for style in &state.styles {
        t.styles +=
            expected_isotropic_log_density(d, els, es, expected_sq_distance(style, &state.w));
    }

    t.theta = ln_dirichlet_norm(&hp.gamma0)
        + hp.gamma0
            .iter()
            .zip(&elog_theta)
            .map(|(g, e)| (g - 1.0) * e)
            .sum::<f64>();
    t.entropy_theta = -(ln_dirichlet_norm(&state.theta_gamma)
        + state
            .theta_gamma
            .iter()
            .zip(&elog_theta)
            .map(|(g, e)| (g - 1.0) * e)
            .sum::<f64>());

    let (eu, elu) = (state.prec_u.mean(), state.prec_u.mean_log());
    for user in &state.users {
        t.users += expected_isotropic_log_density(d, elu, eu, user.second_moment());
    }

    t.w = expected_isotropic_log_density(
        d,
        state.prec_w.mean_log(),
        state.prec_w.mean(),
        state.w.second_moment(),
    );

    let prior = hp.precision_prior();
    for p in [&state.prec_u, &state.prec_b, &state.prec_s, &state.prec_w] {
        t.precisions += p.cross_log_density(&prior);
        t.entropy_precisions += p.entropy();
    }

    for g in &state.users {
        t.entropy_users += g.entropy()?;
    }
    for g in &state.brands {
        t.entropy_brands += g.entropy()?;
    }
    for g in &state.styles {
        t.entropy_styles += g.entropy()?;
    }
    t.entropy_w = state.w.entropy()?;

    Ok(t)
}
