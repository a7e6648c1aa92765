//! Hierarchical Bayesian personalized recommendation.
//!
//! Clicks are modeled as `y ~ Bernoulli(σ(x^T (B_b + U_u)))` where `B_b` is a
//! brand vector drawn from a mixture of latent style vectors and `U_u` is a
//! user vector. The posterior over all latents is approximated with a
//! mean-field family fitted by coordinate ascent, using a quadratic lower
//! bound on the logistic link to keep every update in closed form.
//!
//! Modules:
//! - [`model`]: domain types, the logistic bound and the ELBO
//! - [`inference`]: coordinate updates and the fitting loop
//! - [`generator`]: synthetic data from the generative process
//! - [`predictor`]: predictive click probabilities and top-K ranking
//! - [`evaluation`]: precision/recall/NDCG and cross-validation
//! - [`io`]: event files, feature hashing, checkpoints and reports

pub mod error;
pub mod evaluation;
pub mod generator;
pub mod inference;
pub mod io;
mod linalg;
pub mod model;
pub mod predictor;

pub use error::{HBayesError, Result};
pub use inference::{fit, FitOptions, FitReport};
pub use model::{
    Covariance, Dataset, EventRecord, GammaPosterior, GaussianPosterior, HyperParams,
    Responsibilities, VariationalState,
};
