//! Logistic link and its squared-exponential lower bound.

use nalgebra::DVector;

use super::types::EventRecord;
use crate::error::{HBayesError, Result};

/// Logistic function, evaluated without overflow for any finite input.
#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(v)`, stable in both tails.
#[inline]
pub fn log_sigmoid(v: f64) -> f64 {
    // ln σ(v) = −softplus(−v)
    if v >= 0.0 {
        -(-v).exp().ln_1p()
    } else {
        v - v.exp().ln_1p()
    }
}

/// `λ(ξ) = (σ(ξ) − 1/2) / (2ξ)`.
///
/// Even in ξ; negative inputs are folded onto `|ξ|`. The removable
/// singularity at zero is filled with its limit `1/8`, and a short series is
/// used near zero where the direct quotient loses precision.
pub fn lambda_of_xi(xi: f64) -> f64 {
    let a = xi.abs();
    if a < 1e-4 {
        // σ(ξ) − 1/2 = ξ/4 − ξ³/48 + O(ξ⁵)
        0.125 - a * a / 96.0
    } else {
        (sigmoid(a) - 0.5) / (2.0 * a)
    }
}

/// `σ(ξ) · exp{(h − ξ)/2 − λ(ξ)(h² − ξ²)}`, a lower bound on `σ(h)` that is
/// tight at `h = ±ξ`.
pub fn jj_lower_bound(h: f64, xi: f64) -> f64 {
    log_jj_lower_bound(h, xi).exp()
}

pub(crate) fn log_jj_lower_bound(h: f64, xi: f64) -> f64 {
    log_sigmoid(xi) + 0.5 * (h - xi) - lambda_of_xi(xi) * (h * h - xi * xi)
}

/// Log Bernoulli likelihood of one event at point estimates of its brand and
/// user vectors.
pub fn event_log_likelihood(
    event: &EventRecord,
    brand_mean: &DVector<f64>,
    user_mean: &DVector<f64>,
) -> Result<f64> {
    let d = event.x.len();
    for v in [brand_mean, user_mean] {
        if v.len() != d {
            return Err(HBayesError::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let h = event.x.dot(brand_mean) + event.x.dot(user_mean);
    Ok(if event.clicked {
        log_sigmoid(h)
    } else {
        log_sigmoid(-h)
    })
}
