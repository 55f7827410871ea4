//! Closed-form asymptotic error coefficients. Each `c_i` is the constant in
//! `D_i(n) ≈ c_i / n`.
//!
//! The matrix paths evaluate `ln det` of positive-definite combinations by
//! Cholesky; the eigen paths use the generalized spectra of `I(w*)` and
//! `I_xy(w*)` relative to `I_x(w*)`. Both are exposed so they can be checked
//! against each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::FisherSet;
use crate::linalg::{generalized_eigenvalues, Matrix};
use crate::model::ModelId;

/// Gap below which an ordering comparison counts as a tie.
pub const ORDERING_MARGIN: f64 = 1e-10;
/// Smallest σ eigenvalue still accepted as non-negative.
pub const SIGMA_FLOOR: f64 = -1e-8;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn log_det(m: &Matrix, what: &str) -> Result<f64> {
    m.log_det_pd().map_err(|_| Error::NotPositiveDefinite {
        what: what.to_string(),
        eigenvalue: m.min_eigenvalue(),
    })
}

/// Lin. comb. `p·I_xy + q·I_x`.
fn combo(fs: &FisherSet, p: f64, q: f64) -> Matrix {
    &fs.i_xy.scale(p) + &fs.i_x.scale(q)
}

/// `(dim w̄ / 2) · ln(1/α) / (1 - α)`.
pub fn coeff_model1(dim_reduced: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    // ln(1/α)/(1-α) loses digits near α = 1; -ln_1p(-(1-α)) keeps them
    let one_minus = 1.0 - alpha;
    Ok(0.5 * dim_reduced as f64 * (-(-one_minus).ln_1p()) / one_minus)
}

/// `½ ln det K₂ / (1-α)` with `K₂ = (I_xy - αI_x)(αI_xy + (1-2α)I_x)⁻¹`.
pub fn coeff_model2(fs: &FisherSet, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let num = log_det(&combo(fs, 1.0, -alpha), "I_xy - αI_x")?;
    let den = log_det(&combo(fs, alpha, 1.0 - 2.0 * alpha), "αI_xy + (1-2α)I_x")?;
    Ok(0.5 * (num - den) / (1.0 - alpha))
}

/// `½ ln det K₃ / (1-α)` with `K₃ = I_xy (αI_xy + (1-α)I_x)⁻¹`.
pub fn coeff_model3(fs: &FisherSet, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let num = log_det(&fs.i_xy, "I_xy")?;
    let den = log_det(&combo(fs, alpha, 1.0 - alpha), "αI_xy + (1-α)I_x")?;
    Ok(0.5 * (num - den) / (1.0 - alpha))
}

/// `½ ln det K₄ / (1-α)` with `K₄ = ((1-α)I_xy + αI_x) I_x⁻¹`.
pub fn coeff_nolabel(fs: &FisherSet, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let num = log_det(&combo(fs, 1.0 - alpha, alpha), "(1-α)I_xy + αI_x")?;
    let den = log_det(&fs.i_x, "I_x")?;
    Ok(0.5 * (num - den) / (1.0 - alpha))
}

/// Eigen form of [`coeff_model2`] from the σ spectrum.
pub fn coeff_model2_eigen(sigma_eigs: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let b = 1.0 - alpha;
    let s: f64 = sigma_eigs.iter().map(|&s| ((s + b) / (alpha * s + b)).ln()).sum();
    Ok(0.5 * s / b)
}

/// Eigen form of [`coeff_model3`] from the σ spectrum.
pub fn coeff_model3_eigen(sigma_eigs: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s: f64 = sigma_eigs.iter().map(|&s| ((s + 1.0) / (alpha * s + 1.0)).ln()).sum();
    Ok(0.5 * s / (1.0 - alpha))
}

fn check_lambdas(lambda_eigs: &[f64]) -> Result<()> {
    match lambda_eigs.iter().find(|&&l| !(l > 0.0)) {
        Some(l) => Err(Error::domain(format!("eigenvalue λ = {l} is not positive"))),
        None => Ok(()),
    }
}

/// Eigen form of [`coeff_nolabel`]: `½(1-α)⁻¹ Σ ln(α + (1-α)λᵢ)`.
pub fn coeff_nolabel_eigen(lambda_eigs: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_lambdas(lambda_eigs)?;
    let s: f64 = lambda_eigs.iter().map(|&l| (alpha + (1.0 - alpha) * l).ln()).sum();
    Ok(0.5 * s / (1.0 - alpha))
}

/// `c_nl - c₃ = ½(1-α)⁻¹ Σ ln{α(1-α)(λ + 1/λ) + α² + (1-α)²}`.
pub fn nolabel_gap(lambda_eigs: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_lambdas(lambda_eigs)?;
    let b = 1.0 - alpha;
    let s: f64 = lambda_eigs
        .iter()
        .map(|&l| (alpha * b * (l + 1.0 / l) + alpha * alpha + b * b).ln())
        .sum();
    Ok(0.5 * s / b)
}

/// Coefficient of the unsupervised error, `½ ln det I_xy I_x⁻¹`.
pub fn coeff_unsupervised(fs: &FisherSet) -> Result<f64> {
    Ok(0.5 * (log_det(&fs.i_xy, "I_xy")? - log_det(&fs.i_x, "I_x")?))
}

/// Coefficient of the generalization error, `dim w / 2`.
pub fn coeff_generalization(dim_full: usize) -> f64 {
    0.5 * dim_full as f64
}

/// Limiting inverse covariance of the posterior for models 1 to 3.
pub fn posterior_precision(model: ModelId, fs: &FisherSet, alpha: f64) -> Result<Matrix> {
    check_alpha(alpha)?;
    match model {
        ModelId::Model1 => Ok(fs.i_y_given_x.scale(alpha)),
        ModelId::Model2 => Ok(combo(fs, alpha, 1.0 - 2.0 * alpha)),
        ModelId::Model3 => Ok(combo(fs, alpha, 1.0 - alpha)),
        ModelId::NoLabel => Err(Error::Unsupported(
            "no limiting posterior precision is defined for the no-label model".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorPrecisions {
    pub model1: Matrix,
    pub model2: Matrix,
    pub model3: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_nl: f64,
    pub c_unsup: f64,
    pub g_coeff: f64,
    /// Generalized eigenvalues of `I(w*)` relative to `I_x(w*)`, descending.
    pub sigma_eigs: Vec<f64>,
    /// Generalized eigenvalues of `I_xy(w*)` relative to `I_x(w*)`, descending.
    pub lambda_eigs: Vec<f64>,
    pub posterior_precisions: PosteriorPrecisions,
}

impl CoefficientReport {
    pub fn compute(fs: &FisherSet, alpha: f64) -> Result<CoefficientReport> {
        check_alpha(alpha)?;
        Ok(CoefficientReport {
            alpha,
            c1: coeff_model1(fs.dim_reduced(), alpha)?,
            c2: coeff_model2(fs, alpha)?,
            c3: coeff_model3(fs, alpha)?,
            c_nl: coeff_nolabel(fs, alpha)?,
            c_unsup: coeff_unsupervised(fs)?,
            g_coeff: coeff_generalization(fs.dim_full()),
            sigma_eigs: generalized_eigenvalues(&fs.i_cond, &fs.i_x)?,
            lambda_eigs: generalized_eigenvalues(&fs.i_xy, &fs.i_x)?,
            posterior_precisions: PosteriorPrecisions {
                model1: posterior_precision(ModelId::Model1, fs, alpha)?,
                model2: posterior_precision(ModelId::Model2, fs, alpha)?,
                model3: posterior_precision(ModelId::Model3, fs, alpha)?,
            },
        })
    }

    /// The coefficient belonging to `model`.
    pub fn coefficient(&self, model: ModelId) -> f64 {
        match model {
            ModelId::Model1 => self.c1,
            ModelId::Model2 => self.c2,
            ModelId::Model3 => self.c3,
            ModelId::NoLabel => self.c_nl,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<CoefficientReport> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingVerdict {
    /// `c₃ < c₂ < c₁` with both gaps above the margin.
    Holds,
    /// Some gap is negative beyond the margin.
    Violated,
    /// Some gap is within the margin of zero.
    Boundary,
    /// A σ eigenvalue is negative, so the ordering result does not apply.
    Inapplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub verdict: OrderingVerdict,
    /// `c₂ - c₃`.
    pub gap_32: f64,
    /// `c₁ - c₂`.
    pub gap_21: f64,
}

impl OrderingCheck {
    pub fn holds(&self) -> bool {
        self.verdict == OrderingVerdict::Holds
    }
}

pub fn check_ordering(report: &CoefficientReport) -> OrderingCheck {
    let gap_32 = report.c2 - report.c3;
    let gap_21 = report.c1 - report.c2;
    let verdict = if report.sigma_eigs.iter().any(|&s| !(s >= SIGMA_FLOOR)) {
        OrderingVerdict::Inapplicable
    } else if gap_32 > ORDERING_MARGIN && gap_21 > ORDERING_MARGIN {
        OrderingVerdict::Holds
    } else if gap_32 < -ORDERING_MARGIN || gap_21 < -ORDERING_MARGIN {
        OrderingVerdict::Violated
    } else {
        OrderingVerdict::Boundary
    };
    OrderingCheck {
        verdict,
        gap_32,
        gap_21,
    }
}
