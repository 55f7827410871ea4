//! Gaussian-mixture densities, the semi-supervised likelihoods and the prior.
//!
//! Labels are 1-based (`1..=K`) at every public interface. All densities are
//! evaluated in log space; mixtures go through log-sum-exp.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_normal, log_sum_exp, softplus, LN_2PI};

const SIMPLEX_TOL: f64 = 1e-12;

/// Full generative parameter `w`: mixing weights, component means and the
/// known shared standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct MixtureParams {
    mixing: Vec<f64>,
    means: Vec<Vec<f64>>,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMixture {
    mixing: Vec<f64>,
    means: Vec<Vec<f64>>,
    sigma: f64,
}

impl TryFrom<RawMixture> for MixtureParams {
    type Error = Error;

    fn try_from(raw: RawMixture) -> Result<Self> {
        MixtureParams::new(raw.mixing, raw.means, raw.sigma)
    }
}

impl From<MixtureParams> for RawMixture {
    fn from(p: MixtureParams) -> Self {
        RawMixture {
            mixing: p.mixing,
            means: p.means,
            sigma: p.sigma,
        }
    }
}

impl MixtureParams {
    pub fn new(mixing: Vec<f64>, means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let k = mixing.len();
        if k < 2 {
            return Err(Error::domain(format!("need at least 2 components, got {k}")));
        }
        if means.len() != k {
            return Err(Error::domain(format!("{} mixing weights but {} means", k, means.len())));
        }
        let m = means[0].len();
        if m == 0 || means.iter().any(|b| b.len() != m) {
            return Err(Error::domain("component means must share a dimension >= 1"));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain("component means must be finite"));
        }
        if mixing.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(Error::domain("mixing weights must lie in [0, 1]"));
        }
        let total: f64 = mixing.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("mixing weights sum to {total}, not 1")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(MixtureParams { mixing, means, sigma })
    }

    /// The K = 2, M = 1 parameter `(a1, b1, b2)` with `a2 = 1 - a1`.
    pub fn two_component(a1: f64, b1: f64, b2: f64, sigma: f64) -> Result<Self> {
        MixtureParams::new(vec![a1, 1.0 - a1], vec![vec![b1], vec![b2]], sigma)
    }

    /// `w* = (0.5; 0, 1.5; 1)`, the running example.
    pub fn example_truth() -> Self {
        MixtureParams::two_component(0.5, 0.0, 1.5, 1.0).expect("valid literal")
    }

    pub fn components(&self) -> usize {
        self.mixing.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn mixing(&self) -> &[f64] {
        &self.mixing
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of free parameters: `(K - 1) + K * M`.
    pub fn free_dim(&self) -> usize {
        self.components() - 1 + self.components() * self.dim()
    }

    pub(crate) fn is_two_component_scalar(&self) -> bool {
        self.components() == 2 && self.dim() == 1
    }

    /// `(a1, b1, b2)` for the K = 2, M = 1 case.
    pub fn as_triple(&self) -> Result<[f64; 3]> {
        if !self.is_two_component_scalar() {
            return Err(Error::Unsupported(format!(
                "operation needs K=2, M=1 (got K={}, M={})",
                self.components(),
                self.dim()
            )));
        }
        Ok([self.mixing[0], self.means[0][0], self.means[1][0]])
    }

    fn check_label(&self, y: usize) -> Result<usize> {
        if y == 0 || y > self.components() {
            return Err(Error::domain(format!("label {y} outside 1..={}", self.components())));
        }
        Ok(y - 1)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "data point has dimension {}, model has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Identifiable classifier parameter `(c1, c2)` with `ln f1(x) = c1 x + c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub c1: f64,
    pub c2: f64,
}

impl ReducedParams {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(Error::domain("reduced parameters must be finite"));
        }
        Ok(ReducedParams { c1, c2 })
    }

    pub const DIM: usize = 2;

    pub fn as_array(&self) -> [f64; 2] {
        [self.c1, self.c2]
    }
}

/// A parameter point in whichever space the model works in.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Full(MixtureParams),
    Reduced(ReducedParams),
}

impl From<MixtureParams> for Params {
    fn from(p: MixtureParams) -> Self {
        Params::Full(p)
    }
}

impl From<ReducedParams> for Params {
    fn from(p: ReducedParams) -> Self {
        Params::Reduced(p)
    }
}

/// The four latent-label estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    /// Discriminative: `p(y|x, w̄)` on labeled pairs only, reduced parameters.
    Model1,
    /// Hybrid: discriminative labeled factors, generative unlabeled factors.
    Model2,
    /// Generative: joint labeled factors, marginal unlabeled factors.
    Model3,
    /// Generative estimator that discards the observed labels.
    NoLabel,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::Model1, ModelId::Model2, ModelId::Model3, ModelId::NoLabel];

    pub fn uses_reduced(self) -> bool {
        matches!(self, ModelId::Model1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Model1 => "model1",
            ModelId::Model2 => "model2",
            ModelId::Model3 => "model3",
            ModelId::NoLabel => "nolabel",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "model1" | "1" | "m1" => Ok(ModelId::Model1),
            "model2" | "2" | "m2" => Ok(ModelId::Model2),
            "model3" | "3" | "m3" => Ok(ModelId::Model3),
            "nolabel" | "nl" | "no-label" => Ok(ModelId::NoLabel),
            other => Err(Error::domain(format!("unknown model `{other}`"))),
        }
    }
}

/// Hyperparameters of the prior `φ(w|η)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Dirichlet concentration on the mixing weights.
    pub concentration: Vec<f64>,
    pub mean_location: f64,
    pub mean_scale: f64,
    /// Standard deviation of the independent Gaussians on `(c1, c2)`.
    pub reduced_scale: f64,
    /// Truncate the full-parameter prior to `b1 < b2` (two scalar components
    /// only), removing the label-switching mode. Off by default.
    #[serde(default)]
    pub ordered_means: bool,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            concentration: vec![1.0, 1.0],
            mean_location: 0.0,
            mean_scale: 10.0,
            reduced_scale: 10.0,
            ordered_means: false,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.concentration.len() < 2 {
            return Err(Error::config("prior.concentration", "needs one entry per component"));
        }
        if self.concentration.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::config("prior.concentration", "entries must be positive"));
        }
        if !(self.mean_scale > 0.0 && self.mean_scale.is_finite()) {
            return Err(Error::config("prior.mean_scale", "must be positive"));
        }
        if !(self.reduced_scale > 0.0 && self.reduced_scale.is_finite()) {
            return Err(Error::config("prior.reduced_scale", "must be positive"));
        }
        if !self.mean_location.is_finite() {
            return Err(Error::config("prior.mean_location", "must be finite"));
        }
        Ok(())
    }

    /// `ln Γ(Σ η) - Σ ln Γ(η_k)`.
    pub(crate) fn dirichlet_log_norm(&self) -> f64 {
        let total: f64 = self.concentration.iter().sum();
        libm::lgamma(total) - self.concentration.iter().map(|&c| libm::lgamma(c)).sum::<f64>()
    }
}

/// `ln [a_y N(x | b_y, σ²)]`.
pub fn log_joint(x: &[f64], y: usize, w: &MixtureParams) -> Result<f64> {
    let k = w.check_label(y)?;
    w.check_point(x)?;
    Ok(w.mixing[k].ln() + log_normal(x, &w.means[k], w.sigma))
}

fn log_joint_all(x: &[f64], w: &MixtureParams) -> Vec<f64> {
    w.mixing
        .iter()
        .zip(&w.means)
        .map(|(a, b)| a.ln() + log_normal(x, b, w.sigma))
        .collect()
}

/// `ln Σ_k a_k N(x | b_k, σ²)`.
pub fn log_marginal_x(x: &[f64], w: &MixtureParams) -> Result<f64> {
    w.check_point(x)?;
    Ok(log_sum_exp(&log_joint_all(x, w)))
}

/// `ln p(y | x, w)` from the generative parameterisation.
pub fn log_classify(x: &[f64], y: usize, w: &MixtureParams) -> Result<f64> {
    let k = w.check_label(y)?;
    w.check_point(x)?;
    let joints = log_joint_all(x, w);
    Ok(joints[k] - log_sum_exp(&joints))
}

/// `ln p(y | x, w̄)` for the two-class logistic form.
pub fn log_classify_reduced(x: f64, y: usize, wbar: &ReducedParams) -> Result<f64> {
    let logit = wbar.c1 * x + wbar.c2;
    match y {
        1 => Ok(-softplus(logit)),
        2 => Ok(-softplus(-logit)),
        _ => Err(Error::domain(format!("label {y} outside 1..=2"))),
    }
}

/// Maps `w = (a1; b1, b2; σ=1)` to `w̄ = (b2 - b1, -(b2 - b1)(b2 + b1)/2 + ln(a2/a1))`.
pub fn reduce_params(w: &MixtureParams) -> Result<ReducedParams> {
    let [a1, b1, b2] = w.as_triple()?;
    if w.sigma != 1.0 {
        return Err(Error::Unsupported(format!(
            "reduced mapping is only defined for sigma = 1 (got {})",
            w.sigma
        )));
    }
    if !(a1 > 0.0 && a1 < 1.0) {
        return Err(Error::domain(format!("a1 = {a1} must lie strictly inside (0, 1)")));
    }
    let c1 = b2 - b1;
    let c2 = -0.5 * (b2 - b1) * (b2 + b1) + ((1.0 - a1) / a1).ln();
    Ok(ReducedParams { c1, c2 })
}

fn require_full(params: &Params, model: ModelId) -> Result<&MixtureParams> {
    match params {
        Params::Full(w) => Ok(w),
        Params::Reduced(_) => Err(Error::domain(format!(
            "{model} needs full mixture parameters, got reduced"
        ))),
    }
}

fn require_reduced(params: &Params, model: ModelId) -> Result<&ReducedParams> {
    match params {
        Params::Reduced(w) => Ok(w),
        Params::Full(_) => Err(Error::domain(format!(
            "{model} needs reduced parameters (c1, c2), got full"
        ))),
    }
}

/// Per-point log factor of a likelihood, by factor type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Factor {
    /// `p(y|x)`.
    Conditional,
    /// `p(x, y)`.
    Joint,
    /// `p(x)`.
    Marginal,
}

fn factor_full(factor: Factor, x: f64, y: usize, w: &MixtureParams) -> Result<f64> {
    let x = std::slice::from_ref(&x);
    match factor {
        Factor::Conditional => log_classify(x, y, w),
        Factor::Joint => log_joint(x, y, w),
        Factor::Marginal => log_marginal_x(x, w),
    }
}

/// Factor types `(labeled part, unlabeled part)` of the complete-data likelihood `L(w, X^n, Y^n)`.
pub(crate) fn full_factors(model: ModelId) -> (Factor, Factor) {
    match model {
        ModelId::Model1 => (Factor::Conditional, Factor::Conditional),
        ModelId::Model2 => (Factor::Conditional, Factor::Joint),
        ModelId::Model3 => (Factor::Joint, Factor::Joint),
        ModelId::NoLabel => (Factor::Marginal, Factor::Joint),
    }
}

/// Factor types of the observed-data likelihood `L(w, D)`; `None` drops the part.
pub(crate) fn observed_factors(model: ModelId) -> (Factor, Option<Factor>) {
    match model {
        ModelId::Model1 => (Factor::Conditional, None),
        ModelId::Model2 => (Factor::Conditional, Some(Factor::Marginal)),
        ModelId::Model3 => (Factor::Joint, Some(Factor::Marginal)),
        ModelId::NoLabel => (Factor::Marginal, Some(Factor::Marginal)),
    }
}

fn sum_factors(model: ModelId, params: &Params, points: impl Iterator<Item = (Factor, f64, usize)>) -> Result<f64> {
    let mut total = 0.0;
    if model.uses_reduced() {
        let wbar = require_reduced(params, model)?;
        for (factor, x, y) in points {
            debug_assert_eq!(factor, Factor::Conditional);
            total += log_classify_reduced(x, y, wbar)?;
        }
    } else {
        let w = require_full(params, model)?;
        for (factor, x, y) in points {
            total += factor_full(factor, x, y, w)?;
        }
    }
    Ok(total)
}

/// `ln L(w, X^n, Y^n)`; requires the hidden labels `Y2`.
pub fn log_likelihood_full(model: ModelId, data: &Dataset, params: &Params) -> Result<f64> {
    let y2 = data
        .y2()
        .ok_or_else(|| Error::precondition("complete-data likelihood needs the labels Y2"))?;
    let (lab, unl) = full_factors(model);
    let labeled = data.x1().iter().zip(data.y1()).map(|(&x, &y)| (lab, x, y));
    let unlabeled = data.x2().iter().zip(y2).map(|(&x, &y)| (unl, x, y));
    sum_factors(model, params, labeled.chain(unlabeled))
}

/// `ln L(w, D)` on the observed data `D = {X1, Y1, X2}`.
pub fn log_likelihood_observed(model: ModelId, data: &Dataset, params: &Params) -> Result<f64> {
    let (lab, unl) = observed_factors(model);
    let labeled = data.x1().iter().zip(data.y1()).map(|(&x, &y)| (lab, x, y));
    let unlabeled = unl.into_iter().flat_map(|f| data.x2().iter().map(move |&x| (f, x, 1)));
    sum_factors(model, params, labeled.chain(unlabeled))
}

/// `ln φ(params | η)`.
///
/// Full parameters: Dirichlet on the mixing weights times independent
/// Gaussians on every mean coordinate. Reduced parameters: independent
/// Gaussians on `(c1, c2)`. A mixing weight on the simplex boundary where
/// the Dirichlet density is zero or unbounded returns `-inf`, the
/// out-of-support sentinel; see [`prior_in_support`].
pub fn log_prior(params: &Params, prior: &PriorSpec) -> Result<f64> {
    match params {
        Params::Reduced(wbar) => {
            let s = prior.reduced_scale;
            Ok(wbar
                .as_array()
                .iter()
                .map(|c| -0.5 * (c / s).powi(2) - 0.5 * LN_2PI - s.ln())
                .sum())
        }
        Params::Full(w) => {
            if prior.concentration.len() != w.components() {
                return Err(Error::domain(format!(
                    "prior has {} concentrations for {} components",
                    prior.concentration.len(),
                    w.components()
                )));
            }
            let mut lp = prior.dirichlet_log_norm();
            for (&a, &eta) in w.mixing.iter().zip(&prior.concentration) {
                if eta == 1.0 {
                    continue;
                }
                if a == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                lp += (eta - 1.0) * a.ln();
            }
            if prior.ordered_means {
                if !w.is_two_component_scalar() {
                    return Err(Error::Unsupported(
                        "ordered-means prior needs two scalar components".into(),
                    ));
                }
                if w.means[0][0] >= w.means[1][0] {
                    return Ok(f64::NEG_INFINITY);
                }
                // the truncated region holds half the mass of the exchangeable prior
                lp += std::f64::consts::LN_2;
            }
            let s = prior.mean_scale;
            let per_coord = -0.5 * LN_2PI - s.ln();
            for b in w.means.iter().flatten() {
                let z = (b - prior.mean_location) / s;
                lp += -0.5 * z * z + per_coord;
            }
            Ok(lp)
        }
    }
}

/// Whether `log_prior` is a finite number at `params`.
pub fn prior_in_support(params: &Params, prior: &PriorSpec) -> bool {
    matches!(log_prior(params, prior), Ok(v) if v.is_finite())
}

/// Log-density of the two-component marginal at scalar `x`, specialised for hot loops.
#[inline]
pub(crate) fn log_marginal_scalar(x: f64, a1: f64, b1: f64, b2: f64, sigma: f64) -> f64 {
    use crate::numeric::log_normal_1d;
    log_add_exp(
        a1.ln() + log_normal_1d(x, b1, sigma),
        (1.0 - a1).ln() + log_normal_1d(x, b2, sigma),
    )
}
