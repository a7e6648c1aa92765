use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{HBayesError, Result};
use crate::linalg::{cholesky_log_det, robust_cholesky};

/// Model hyper-parameters plus the stopping rule for the fitting loop.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub num_styles: usize,
    pub feature_dim: usize,
    /// Dirichlet concentration of the style proportions, one entry per style.
    pub gamma0: Vec<f64>,
    /// Gamma shape shared by the four precision priors.
    pub alpha0: f64,
    /// Gamma rate shared by the four precision priors.
    pub beta0: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl HyperParams {
    /// Defaults: symmetric concentration `1/S`, vague `Gamma(0.01, 0.01)`
    /// precision priors, at most 200 sweeps and a relative tolerance of 1e-5.
    pub fn new(num_styles: usize, feature_dim: usize) -> Self {
        let s = num_styles.max(1);
        HyperParams {
            num_styles,
            feature_dim,
            gamma0: vec![1.0 / s as f64; num_styles],
            alpha0: 1e-2,
            beta0: 1e-2,
            max_iters: 200,
            rel_tol: 1e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_styles == 0 {
            return Err(HBayesError::InvalidInput("num_styles must be >= 1".into()));
        }
        if self.feature_dim == 0 {
            return Err(HBayesError::InvalidInput("feature_dim must be >= 1".into()));
        }
        if self.gamma0.len() != self.num_styles {
            return Err(HBayesError::DimensionMismatch {
                expected: self.num_styles,
                found: self.gamma0.len(),
            });
        }
        if !self.gamma0.iter().all(|g| g.is_finite() && *g > 0.0) {
            return Err(HBayesError::InvalidInput(
                "gamma0 entries must be > 0".into(),
            ));
        }
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(HBayesError::InvalidInput("alpha0 must be > 0".into()));
        }
        if !(self.beta0.is_finite() && self.beta0 > 0.0) {
            return Err(HBayesError::InvalidInput("beta0 must be > 0".into()));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(HBayesError::InvalidInput("rel_tol must be > 0".into()));
        }
        Ok(())
    }

    pub fn precision_prior(&self) -> GammaPosterior {
        GammaPosterior {
            shape: self.alpha0,
            rate: self.beta0,
        }
    }
}

/// One observed impression: item features, the item's brand, the user and
/// whether the user clicked.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub x: DVector<f64>,
    pub brand: usize,
    pub user: usize,
    pub clicked: bool,
}

impl EventRecord {
    pub fn new(x: Vec<f64>, brand: usize, user: usize, clicked: bool) -> Self {
        EventRecord {
            x: DVector::from_vec(x),
            brand,
            user,
            clicked,
        }
    }

    /// The label as a number in {0, 1}.
    #[inline]
    pub fn y(&self) -> f64 {
        if self.clicked {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub events: Vec<EventRecord>,
    pub num_users: usize,
    pub num_brands: usize,
    pub feature_dim: usize,
}

impl Dataset {
    /// Builds a dataset, checking every event against the declared sizes.
    pub fn new(
        events: Vec<EventRecord>,
        num_users: usize,
        num_brands: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        if feature_dim == 0 {
            return Err(HBayesError::InvalidInput("feature_dim must be >= 1".into()));
        }
        for (t, e) in events.iter().enumerate() {
            if e.x.len() != feature_dim {
                return Err(HBayesError::DimensionMismatch {
                    expected: feature_dim,
                    found: e.x.len(),
                });
            }
            if e.user >= num_users || e.brand >= num_brands {
                return Err(HBayesError::InvalidInput(format!(
                    "event {t} references user {} / brand {} outside {num_users} users / {num_brands} brands",
                    e.user, e.brand
                )));
            }
            if !e.x.iter().all(|v| v.is_finite()) {
                return Err(HBayesError::InvalidInput(format!(
                    "event {t} has non-finite features"
                )));
            }
        }
        Ok(Dataset {
            events,
            num_users,
            num_brands,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Event indices grouped by user.
    pub fn events_by_user(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_users];
        for (t, e) in self.events.iter().enumerate() {
            out[e.user].push(t);
        }
        out
    }

    /// Event indices grouped by brand.
    pub fn events_by_brand(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_brands];
        for (t, e) in self.events.iter().enumerate() {
            out[e.brand].push(t);
        }
        out
    }

    /// A dataset with the same id spaces holding only the chosen events.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            events: indices.iter().map(|&t| self.events[t].clone()).collect(),
            num_users: self.num_users,
            num_brands: self.num_brands,
            feature_dim: self.feature_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Full(DMatrix<f64>),
    /// `scale * I`
    Isotropic(f64),
}

/// Mean and covariance of one latent vector factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub covariance: Covariance,
}

impl GaussianPosterior {
    pub fn full(mean: DVector<f64>, covariance: DMatrix<f64>) -> Self {
        GaussianPosterior {
            mean,
            covariance: Covariance::Full(covariance),
        }
    }

    pub fn isotropic(mean: DVector<f64>, scale: f64) -> Self {
        GaussianPosterior {
            mean,
            covariance: Covariance::Isotropic(scale),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn trace(&self) -> f64 {
        match &self.covariance {
            Covariance::Full(m) => m.trace(),
            Covariance::Isotropic(s) => s * self.dim() as f64,
        }
    }

    /// `x^T Σ x`
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        match &self.covariance {
            Covariance::Full(m) => (m * x).dot(x),
            Covariance::Isotropic(s) => s * x.norm_squared(),
        }
    }

    /// `E[v^T v] = ||mean||^2 + tr Σ`
    pub fn second_moment(&self) -> f64 {
        self.mean.norm_squared() + self.trace()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        match &self.covariance {
            Covariance::Full(m) => m.clone(),
            Covariance::Isotropic(s) => DMatrix::identity(self.dim(), self.dim()) * *s,
        }
    }

    pub fn log_det(&self) -> Result<f64> {
        match &self.covariance {
            Covariance::Full(m) => Ok(cholesky_log_det(&robust_cholesky(m)?)),
            Covariance::Isotropic(s) if *s > 0.0 => Ok(self.dim() as f64 * s.ln()),
            Covariance::Isotropic(_) => Err(HBayesError::numerical(
                "isotropic covariance scale must be > 0",
            )),
        }
    }

    pub fn entropy(&self) -> Result<f64> {
        let d = self.dim() as f64;
        Ok(0.5 * d * (1.0 + (2.0 * std::f64::consts::PI).ln()) + 0.5 * self.log_det()?)
    }

    /// Checks symmetry and strict positive definiteness (no jitter allowed).
    pub fn validate(&self) -> Result<()> {
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(HBayesError::Invariant("non-finite posterior mean".into()));
        }
        match &self.covariance {
            Covariance::Isotropic(s) => {
                if !(s.is_finite() && *s > 0.0) {
                    return Err(HBayesError::Invariant(format!(
                        "isotropic covariance scale {s} is not positive"
                    )));
                }
            }
            Covariance::Full(m) => {
                let d = self.dim();
                if m.nrows() != d || m.ncols() != d {
                    return Err(HBayesError::DimensionMismatch {
                        expected: d,
                        found: m.nrows(),
                    });
                }
                let asym = (m - m.transpose()).amax();
                if asym.is_nan() || asym > 1e-9 * m.amax().max(1.0) {
                    return Err(HBayesError::Invariant("covariance is not symmetric".into()));
                }
                if nalgebra::Cholesky::new(m.clone()).is_none() {
                    return Err(HBayesError::Invariant(
                        "covariance is not positive definite".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `Gamma(shape, rate)` factor over a precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPosterior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPosterior {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// `E[ln δ] = ψ(shape) − ln(rate)`
    pub fn mean_log(&self) -> f64 {
        digamma(self.shape) - self.rate.ln()
    }

    pub fn entropy(&self) -> f64 {
        let a = self.shape;
        a - self.rate.ln() + ln_gamma(a) + (1.0 - a) * digamma(a)
    }

    /// `E_self[ln Gamma(δ; prior)]`
    pub fn cross_log_density(&self, prior: &GammaPosterior) -> f64 {
        prior.shape * prior.rate.ln() - ln_gamma(prior.shape)
            + (prior.shape - 1.0) * self.mean_log()
            - prior.rate * self.mean()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape.is_finite() && self.shape > 0.0) {
            return Err(HBayesError::Invariant(format!(
                "gamma shape {} must be > 0",
                self.shape
            )));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(HBayesError::Invariant(format!(
                "gamma rate {} must be > 0",
                self.rate
            )));
        }
        Ok(())
    }
}

/// `B x S` matrix of style-membership probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub mu: DMatrix<f64>,
}

impl Responsibilities {
    pub fn uniform(num_brands: usize, num_styles: usize) -> Self {
        Responsibilities {
            mu: DMatrix::from_element(num_brands, num_styles, 1.0 / num_styles as f64),
        }
    }

    pub fn num_brands(&self) -> usize {
        self.mu.nrows()
    }

    pub fn num_styles(&self) -> usize {
        self.mu.ncols()
    }

    /// Column sums `Σ_i μ_ij`.
    pub fn style_weights(&self) -> Vec<f64> {
        (0..self.num_styles())
            .map(|j| self.mu.column(j).sum())
            .collect()
    }

    /// Most probable style per brand; ties go to the lower index.
    pub fn hard_assignments(&self) -> Vec<usize> {
        (0..self.num_brands())
            .map(|i| {
                let row = self.mu.row(i);
                let mut best = 0;
                for j in 1..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.num_brands() {
            let row = self.mu.row(i);
            if !row.iter().all(|v| (0.0..=1.0).contains(v)) {
                return Err(HBayesError::Invariant(format!(
                    "responsibility row {i} has entries outside [0, 1]"
                )));
            }
            let s = row.sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(HBayesError::Invariant(format!(
                    "responsibility row {i} sums to {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Every factor of the mean-field posterior plus the per-event bound
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub users: Vec<GaussianPosterior>,
    pub brands: Vec<GaussianPosterior>,
    /// Isotropic.
    pub styles: Vec<GaussianPosterior>,
    /// Isotropic.
    pub w: GaussianPosterior,
    /// Posterior Dirichlet concentration.
    pub theta_gamma: Vec<f64>,
    pub resp: Responsibilities,
    pub prec_u: GammaPosterior,
    pub prec_b: GammaPosterior,
    pub prec_s: GammaPosterior,
    pub prec_w: GammaPosterior,
    pub xi: Vec<f64>,
}

impl VariationalState {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_brands(&self) -> usize {
        self.brands.len()
    }

    pub fn num_styles(&self) -> usize {
        self.styles.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.w.dim()
    }

    /// `E[ln θ_j] = ψ(γ_j) − ψ(Σγ)`
    pub fn expected_log_theta(&self) -> Vec<f64> {
        let total: f64 = self.theta_gamma.iter().sum();
        let dg_total = digamma(total);
        self.theta_gamma
            .iter()
            .map(|g| digamma(*g) - dg_total)
            .collect()
    }

    /// Checks every contained invariant.
    pub fn validate(&self) -> Result<()> {
        let d = self.feature_dim();
        let s = self.num_styles();
        if s == 0 {
            return Err(HBayesError::Invariant("state has no styles".into()));
        }
        for g in self
            .users
            .iter()
            .chain(self.brands.iter())
            .chain(self.styles.iter())
            .chain(std::iter::once(&self.w))
        {
            if g.dim() != d {
                return Err(HBayesError::DimensionMismatch {
                    expected: d,
                    found: g.dim(),
                });
            }
            g.validate()?;
        }
        for g in self.styles.iter().chain(std::iter::once(&self.w)) {
            if !matches!(g.covariance, Covariance::Isotropic(_)) {
                return Err(HBayesError::Invariant(
                    "style and w factors must be isotropic".into(),
                ));
            }
        }
        if self.theta_gamma.len() != s {
            return Err(HBayesError::DimensionMismatch {
                expected: s,
                found: self.theta_gamma.len(),
            });
        }
        if !self.theta_gamma.iter().all(|g| g.is_finite() && *g > 0.0) {
            return Err(HBayesError::Invariant(
                "theta_gamma entries must be > 0".into(),
            ));
        }
        if self.resp.num_brands() != self.num_brands() || self.resp.num_styles() != s {
            return Err(HBayesError::Invariant(format!(
                "responsibilities are {}x{}, expected {}x{}",
                self.resp.num_brands(),
                self.resp.num_styles(),
                self.num_brands(),
                s
            )));
        }
        self.resp.validate()?;
        for p in [&self.prec_u, &self.prec_b, &self.prec_s, &self.prec_w] {
            p.validate()?;
        }
        if !self.xi.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(HBayesError::Invariant(
                "xi entries must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Checks that the state fits the dataset's sizes.
    pub fn check_against(&self, data: &Dataset) -> Result<()> {
        if self.num_users() != data.num_users
            || self.num_brands() != data.num_brands
            || self.feature_dim() != data.feature_dim
            || self.xi.len() != data.len()
        {
            return Err(HBayesError::InvalidInput(format!(
                "state (U={}, B={}, d={}, N={}) does not match dataset (U={}, B={}, d={}, N={})",
                self.num_users(),
                self.num_brands(),
                self.feature_dim(),
                self.xi.len(),
                data.num_users,
                data.num_brands,
                data.feature_dim,
                data.len()
            )));
        }
        Ok(())
    }
}
