//! Domain types and the probability math of the hierarchical model.

mod bound;
mod elbo;
mod types;

pub use bound::{event_log_likelihood, jj_lower_bound, lambda_of_xi, log_sigmoid, sigmoid};
pub use elbo::{elbo, elbo_terms, ElboTerms};
pub(crate) use elbo::{event_moments, expected_sq_distance};
pub use types::{
    Covariance, Dataset, EventRecord, GammaPosterior, GaussianPosterior, HyperParams,
    Responsibilities, VariationalState,
};
