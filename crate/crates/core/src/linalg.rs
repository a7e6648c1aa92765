use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{HBayesError, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Cholesky factor of a symmetric positive-definite matrix. On failure the
/// diagonal is jittered starting at 1e-10 and escalating by 10x up to 1e-6.
pub(crate) fn robust_cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let n = m.nrows();
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let shifted = m + DMatrix::identity(n, n) * jitter;
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(HBayesError::numerical(
        "matrix is not positive definite even after diagonal jitter",
    ))
}

/// Inverse of an SPD matrix, symmetrised to remove round-off asymmetry.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = robust_cholesky(m)?.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

pub(crate) fn cholesky_log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}
