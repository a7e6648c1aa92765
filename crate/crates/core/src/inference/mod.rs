//! Coordinate-ascent fitting of the mean-field posterior.
//!
//! One sweep updates, in order: responsibilities, the style-proportion
//! Dirichlet, every user, every brand, then every style, `w` and the four
//! precisions (this block repeated [`FitOptions::hierarchy_passes`] times)
//! and finally the per-event bound parameters ξ. Each step maximises the ELBO
//! over one factor with the others held fixed, so the ELBO never decreases
//! from sweep to sweep.

mod init;
mod updates;

use rayon::prelude::*;

use crate::error::{HBayesError, Result};
use crate::model::{elbo, Dataset, HyperParams, VariationalState};

pub use init::{initialize, initialize_random, initialize_with, InitStrategy};

pub use updates::{
    update_brand, update_precisions, update_responsibilities, update_style, update_theta,
    update_user, update_w, update_xi, PrecisionPosteriors,
};

/// Diagnostics of one fitting run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// ELBO after each completed sweep.
    pub elbo_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    /// Run per-user, per-brand, per-style and per-event updates on the rayon
    /// pool. Each entity's update is computed identically either way, so the
    /// result does not depend on this flag.
    pub parallel: bool,
    /// Starting point used by [`fit_with`].
    pub init: InitStrategy,
    /// Times the style, `w` and precision updates are repeated inside one
    /// sweep. These updates touch no event, so repeating them is cheap; it
    /// speeds up the slow drift of δ_w when there are few styles.
    pub hierarchy_passes: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            parallel: false,
            init: InitStrategy::default(),
            hierarchy_passes: 10,
        }
    }
}

/// Fits the model from a seeded initial state with default options.
pub fn fit(data: &Dataset, hp: &HyperParams, seed: u64) -> Result<(VariationalState, FitReport)> {
    fit_with(data, hp, seed, FitOptions::default())
}

pub fn fit_with(
    data: &Dataset,
    hp: &HyperParams,
    seed: u64,
    options: FitOptions,
) -> Result<(VariationalState, FitReport)> {
    if data.is_empty() {
        return Err(HBayesError::EmptyDataset);
    }
    let state = initialize_with(data, hp, seed, options.init)?;
    fit_from(state, data, hp, options)
}

/// Runs sweeps from a caller-provided state until the relative ELBO change
/// drops below `hp.rel_tol` or `hp.max_iters` sweeps have run.
pub fn fit_from(
    mut state: VariationalState,
    data: &Dataset,
    hp: &HyperParams,
    options: FitOptions,
) -> Result<(VariationalState, FitReport)> {
    hp.validate()?;
    state.check_against(data)?;
    let mut report = FitReport {
        elbo_trace: Vec::with_capacity(hp.max_iters.min(1024)),
        iterations_run: 0,
        converged: false,
    };
    if hp.max_iters == 0 {
        return Ok((state, report));
    }

    let index = SweepIndex::new(data);
    let mut previous = elbo(&state, data, hp)?;
    for iteration in 1..=hp.max_iters {
        sweep(&mut state, data, hp, &index, options).map_err(|e| e.at_iteration(iteration))?;
        let current = elbo(&state, data, hp).map_err(|e| e.at_iteration(iteration))?;
        if !current.is_finite() {
            return Err(HBayesError::Numerical {
                message: format!("ELBO became {current}"),
                iteration: Some(iteration),
            });
        }
        report.elbo_trace.push(current);
        report.iterations_run = iteration;
        let rel_change = (current - previous).abs() / (previous.abs() + 1e-12);
        previous = current;
        if rel_change < hp.rel_tol {
            report.converged = true;
            break;
        }
    }
    Ok((state, report))
}

/// Per-entity event lists, built once per fit.
pub struct SweepIndex {
    by_user: Vec<Vec<usize>>,
    by_brand: Vec<Vec<usize>>,
}

impl SweepIndex {
    pub fn new(data: &Dataset) -> Self {
        SweepIndex {
            by_user: data.events_by_user(),
            by_brand: data.events_by_brand(),
        }
    }
}

/// One full coordinate-ascent pass, mutating `state` in place.
pub fn sweep(
    state: &mut VariationalState,
    data: &Dataset,
    hp: &HyperParams,
    index: &SweepIndex,
    options: FitOptions,
) -> Result<()> {
    state.resp = update_responsibilities(state, data, hp)?;
    state.theta_gamma = update_theta(&state.resp, hp);

    state.users = map_indexed(options.parallel, state.num_users(), |k| {
        updates::user_posterior(k, &index.by_user[k], state, data)
    })?;
    state.brands = map_indexed(options.parallel, state.num_brands(), |i| {
        updates::brand_posterior(i, &index.by_brand[i], state, data)
    })?;
    for _ in 0..options.hierarchy_passes.max(1) {
        state.styles = map_indexed(options.parallel, state.num_styles(), |j| {
            Ok(update_style(j, state))
        })?;
        state.w = update_w(state);

        let p = update_precisions(state, hp);
        state.prec_u = p.user;
        state.prec_b = p.brand;
        state.prec_s = p.style;
        state.prec_w = p.w;
    }

    state.xi = if options.parallel {
        data.events
            .par_iter()
            .map(|e| updates::xi_for_event(state, e))
            .collect()
    } else {
        update_xi(state, data)
    };
    Ok(())
}

fn map_indexed<T, F>(parallel: bool, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}
