//! Per-dataset free energies `ln[∏ true factors] - ln ∫ ∏ model factors φ dw`
//! on the grid, and their link to the KL error of the latent labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{binary_assignments, Dataset};
use crate::error::{Error, Result};
use crate::inference::grid::{full_points, grid_posterior_points, observed_points, GridSpec, Points};
use crate::inference::{LatentPredictor, MAX_ENUMERATION};
use crate::model::{log_classify, log_joint, log_marginal_x, Factor, MixtureParams, ModelId, PriorSpec};

/// Which factorization the free energy integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeEnergyKind {
    /// `p(y|x)` on every labeled point; the hidden labels count as labeled when supplied.
    #[serde(rename = "y|x")]
    YGivenX,
    /// `p(x, y)` on all `n` points.
    #[serde(rename = "xy")]
    Xy,
    /// `p(x, y)` on the labeled points, `p(x)` on the unlabeled ones.
    #[serde(rename = "xy&x")]
    XyX,
    /// `p(y|x)` on the labeled points, `p(x, y)` on the unlabeled ones.
    #[serde(rename = "y|x&xy")]
    YGivenXXy,
    /// `p(y|x)` on the labeled points, `p(x)` on the unlabeled ones.
    #[serde(rename = "y|x&x")]
    YGivenXX,
}

impl FreeEnergyKind {
    pub const ALL: [FreeEnergyKind; 5] = [
        FreeEnergyKind::YGivenX,
        FreeEnergyKind::Xy,
        FreeEnergyKind::XyX,
        FreeEnergyKind::YGivenXXy,
        FreeEnergyKind::YGivenXX,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FreeEnergyKind::YGivenX => "y|x",
            FreeEnergyKind::Xy => "xy",
            FreeEnergyKind::XyX => "xy&x",
            FreeEnergyKind::YGivenXXy => "y|x&xy",
            FreeEnergyKind::YGivenXX => "y|x&x",
        }
    }

    pub fn model(self) -> ModelId {
        match self {
            FreeEnergyKind::YGivenX => ModelId::Model1,
            FreeEnergyKind::Xy | FreeEnergyKind::XyX => ModelId::Model3,
            FreeEnergyKind::YGivenXXy | FreeEnergyKind::YGivenXX => ModelId::Model2,
        }
    }

    /// The complete-data and observed-data kinds of a model.
    pub fn pair(model: ModelId) -> Result<(FreeEnergyKind, FreeEnergyKind)> {
        match model {
            ModelId::Model1 => Ok((FreeEnergyKind::YGivenX, FreeEnergyKind::YGivenX)),
            ModelId::Model2 => Ok((FreeEnergyKind::YGivenXXy, FreeEnergyKind::YGivenXX)),
            ModelId::Model3 => Ok((FreeEnergyKind::Xy, FreeEnergyKind::XyX)),
            ModelId::NoLabel => Err(Error::Unsupported(
                "no free-energy form for the no-label estimator".into(),
            )),
        }
    }
}

impl fmt::Display for FreeEnergyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FreeEnergyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FreeEnergyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown free-energy kind `{s}`")))
    }
}

fn points_for(kind: FreeEnergyKind, data: &Dataset, y2: Option<&[usize]>) -> Result<Points> {
    let model = kind.model();
    match kind {
        FreeEnergyKind::YGivenX => match y2 {
            Some(y2) => full_points(model, data, y2),
            None => Ok(observed_points(model, data)),
        },
        FreeEnergyKind::Xy | FreeEnergyKind::YGivenXXy => {
            let y2 = y2
                .or(data.y2())
                .ok_or_else(|| Error::precondition(format!("free energy `{kind}` needs the labels Y2")))?;
            full_points(model, data, y2)
        }
        FreeEnergyKind::XyX | FreeEnergyKind::YGivenXX => {
            if y2.is_some() {
                return Err(Error::precondition(format!(
                    "free energy `{kind}` uses the observed data only"
                )));
            }
            Ok(observed_points(model, data))
        }
    }
}

fn truth_log_product(points: &Points, truth: &MixtureParams) -> Result<f64> {
    let mut total = 0.0;
    for &(factor, x, y) in points {
        let x = std::slice::from_ref(&x);
        total += match factor {
            Factor::Conditional => log_classify(x, y, truth)?,
            Factor::Joint => log_joint(x, y, truth)?,
            Factor::Marginal => log_marginal_x(x, truth)?,
        };
    }
    Ok(total)
}

/// Free energy of one dataset. `y2` supplies the hidden labels for the
/// complete-data kinds; `xy` and `y|x&xy` fall back on the labels stored in
/// `data`, while `y|x` without `y2` covers the labeled points only.
pub fn free_energy(
    kind: FreeEnergyKind,
    data: &Dataset,
    y2: Option<&[usize]>,
    truth: &MixtureParams,
    prior: &PriorSpec,
    grid: &GridSpec,
) -> Result<f64> {
    let points = points_for(kind, data, y2)?;
    if points.is_empty() {
        return Ok(0.0);
    }
    let log_z = grid_posterior_points(kind.model(), &points, prior, grid)?.log_normalizer;
    Ok(truth_log_product(&points, truth)? - log_z)
}

/// `Σ_{Y2} q(Y2|X2) F_full(Y2) - F_obs`, which equals `|X2|` times the exact
/// KL error of the grid predictor.
pub fn free_energy_kl(
    model: ModelId,
    data: &Dataset,
    truth: &MixtureParams,
    prior: &PriorSpec,
    grid: &GridSpec,
) -> Result<f64> {
    let (full, obs) = FreeEnergyKind::pair(model)?;
    let m = data.n_unlabeled();
    if m > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge {
            size: m,
            limit: MAX_ENUMERATION,
        });
    }
    let observed = data.observed_only();
    let f_obs = free_energy(obs, &observed, None, truth, prior, grid)?;
    let lq = LatentPredictor::truth(truth, data.x2())?.log_predict_all()?;
    let mut total = 0.0;
    for (y2, lq) in binary_assignments(m).zip(lq) {
        if lq == f64::NEG_INFINITY {
            continue;
        }
        total += lq.exp() * free_energy(full, &observed, Some(&y2), truth, prior, grid)?;
    }
    Ok(total - f_obs)
}
