//! Recursive approximate-Bayesian filters for mixture models.
//!
//! * [`gaussian_mean`]: moment-matching Gaussian updates for a shared location
//!   parameter μ, with their asymptotic diagnostics.
//! * [`weight`]: Beta approximations to the weight of a two-component mixture
//!   (quasi-Bayes, probabilistic editor, KL, variational, EP).
//! * [`dirichlet`]: the J-component generalisation of the moment-matching update.
//! * [`oracle`]: exact and quadrature posteriors, information integrals.
//! * [`harness`]: simulation and experiment orchestration behind the CLI.

pub mod density;
pub mod dirichlet;
pub mod error;
pub mod gaussian_mean;
pub mod harness;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod weight;

pub use density::{KnownDensity, KnownDensityPair, KnownDensitySet};
pub use dirichlet::{DirichletState, SecondMomentPolicy};
pub use error::{Error, Result};
pub use gaussian_mean::{GaussianState, MeanMixtureModel};
pub use oracle::PosteriorSummary;
pub use quadrature::QuadratureSpec;
pub use special::SolverSettings;
pub use weight::BetaState;
