//! Posterior computation, predictive distributions of the hidden labels, and
//! the KL generalization error.

pub mod grid;
pub mod mcmc;
pub mod predict;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ReducedParams;

pub use grid::{grid_posterior, log_evidence_table, log_predict_y2_grid, AxisSpec, GridPosterior, GridSpec};
pub use mcmc::{mcmc_posterior, posterior_mean_reduced, McmcConfig, SampleChain};
pub use predict::{kl_error_exact, kl_error_mc, log_predict_y2_mc, LatentPredictor, McEstimate};

/// Largest number of unlabeled points whose `2^m` label assignments are enumerated.
pub const MAX_ENUMERATION: usize = 14;

/// Squared error of posterior means around the truth, across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    pub replications: usize,
    pub mean: [f64; 2],
    /// Average of `|ŵ - w̄*|²` over replications.
    pub mean_sq_error: f64,
    pub per_coordinate_sq_error: [f64; 2],
}

pub fn convergence_stats(means: &[[f64; 2]], truth: &ReducedParams) -> Result<ConvergenceStats> {
    if means.is_empty() {
        return Err(Error::precondition("no replications"));
    }
    let t = truth.as_array();
    let r = means.len() as f64;
    let mut mean = [0.0; 2];
    let mut per = [0.0; 2];
    for m in means {
        for j in 0..2 {
            mean[j] += m[j] / r;
            per[j] += (m[j] - t[j]).powi(2) / r;
        }
    }
    Ok(ConvergenceStats {
        replications: means.len(),
        mean,
        mean_sq_error: per[0] + per[1],
        per_coordinate_sq_error: per,
    })
}
