//! Maximum approximated likelihood (MAL) estimation.
//!
//! Likelihood contributions that are integrals over a latent variable are
//! replaced by an `r`-point rule. This crate provides the rules (Gaussian
//! quadrature, Monte Carlo, quasi-Monte Carlo, Smolyak sparse grids), the
//! model integrands with analytic parameter derivatives, the approximated
//! log-likelihood and its maximizer, link functions coupling rule size to
//! sample size, error diagnostics, and the convergence/RMSE experiments.
//!
//! The rule constructors are generic over the scalar type ([`Real`]); the
//! statistical layers work in `f64`. Concrete aliases live at the crate root.

pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod link;
pub mod method;
pub mod models;
pub mod quadrature;
pub mod real;
pub mod rng;
pub mod sparse_grid;
pub mod special;

pub use error::{Error, Result};
pub use real::Real;

/// One-dimensional rule in double precision.
pub type Rule1D = quadrature::Rule1d<f64>;
/// Multivariate rule in double precision.
pub type RuleND = quadrature::RuleNd<f64>;
/// One-dimensional rule in single precision.
pub type Rule1DF32 = quadrature::Rule1d<f32>;
/// Multivariate rule in single precision.
pub type RuleNDF32 = quadrature::RuleNd<f32>;

pub use diagnostics::{ErrorReport, RateFit};
pub use estimator::{MalEstimate, MalProblem, MaximizeOptions};
pub use link::LinkFunction;
pub use method::{Method, RuleSpec};
pub use models::{Dataset, Integrand};
pub use sparse_grid::SparseGridSpec;
