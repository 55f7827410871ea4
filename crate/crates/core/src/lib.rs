//! Bayesian latent-variable estimation for semi-supervised learning on
//! two-component Gaussian mixtures.
//!
//! The crate covers the densities and likelihoods of three semi-supervised
//! model formulations plus a no-label baseline, Fisher information by
//! quadrature, closed-form asymptotic error coefficients, grid and MCMC
//! posteriors, and a config-driven experiment harness.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN too

pub mod asymptotics;
pub mod data;
pub mod error;
pub mod fisher;
pub mod harness;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod numeric;
pub mod quadrature;
pub mod rng;

pub use asymptotics::CoefficientReport;
pub use data::Dataset;
pub use error::{Error, Result};
pub use fisher::FisherSet;
pub use linalg::Matrix;
pub use model::{MixtureParams, ModelId, Params, PriorSpec, ReducedParams};
pub use quadrature::QuadratureSpec;
