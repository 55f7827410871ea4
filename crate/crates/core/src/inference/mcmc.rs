//! Random-walk Metropolis on the observed-data posterior.
//!
//! The full models move in `(logit a1, b1, b2)` with the logit Jacobian folded
//! into the target; Model1 moves in `(c1, c2)`. Each sweep updates one
//! coordinate at a time with a Gaussian proposal whose scale adapts towards
//! the target acceptance rate during burn-in and is frozen afterwards, so the
//! retained chain is a plain time-homogeneous Metropolis chain.

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{observed_factors, Factor, ModelId, PriorSpec};
use crate::numeric::{log_normal_1d, sigmoid, softplus, LN_2PI};
use crate::rng::{rng_for, stream};

/// Acceptance rates outside this band flag the chain as poorly mixed.
pub const ACCEPTANCE_BAND: (f64, f64) = (0.1, 0.6);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    #[serde(default = "default_target")]
    pub target_acceptance: f64,
    /// Propose the relabelling `(a1, b1, b2) -> (1 - a1, b2, b1)` once per sweep.
    #[serde(default = "default_true")]
    pub label_swap: bool,
    #[serde(default = "default_step")]
    pub initial_step: f64,
}

fn default_target() -> f64 {
    0.35
}

fn default_true() -> bool {
    true
}

fn default_step() -> f64 {
    0.5
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig::with_retained(2000, 5000, 10)
    }
}

impl McmcConfig {
    /// Config that keeps exactly `retained` samples.
    pub fn with_retained(retained: usize, burn_in: usize, thin: usize) -> Self {
        McmcConfig {
            iterations: burn_in + retained * thin,
            burn_in,
            thin,
            target_acceptance: default_target(),
            label_swap: true,
            initial_step: default_step(),
        }
    }

    pub fn retained(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::config("mcmc.thin", "must be at least 1"));
        }
        if self.burn_in > self.iterations {
            return Err(Error::config("mcmc.burn_in", "exceeds mcmc.iterations"));
        }
        if self.retained() == 0 {
            return Err(Error::config(
                "mcmc.iterations",
                "leaves no retained samples after burn-in and thinning",
            ));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::config("mcmc.target_acceptance", "must lie in (0, 1)"));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::config("mcmc.initial_step", "must be positive"));
        }
        Ok(())
    }
}

/// Retained draws of one chain. Full-model samples are `[a1, b1, b2]`,
/// Model1 samples are `[c1, c2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleChain {
    pub model: ModelId,
    pub samples: Vec<Vec<f64>>,
    /// Post-burn-in acceptance rate of the coordinate moves.
    pub acceptance_rate: f64,
    pub step_scales: Vec<f64>,
    pub seed: u64,
    pub sigma: f64,
    /// Acceptance rate fell outside [`ACCEPTANCE_BAND`].
    pub flagged: bool,
}

impl SampleChain {
    pub fn dim(&self) -> usize {
        if self.model.uses_reduced() {
            2
        } else {
            3
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[j]).collect()
    }

    /// Writes `a1,b1,b2,c1,c2`; coordinates the model does not carry are left
    /// empty, and full-model rows also report their reduced image.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["a1", "b1", "b2", "c1", "c2"])?;
        let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for s in &self.samples {
            let row: [Option<f64>; 5] = if self.model.uses_reduced() {
                [None, None, None, Some(s[0]), Some(s[1])]
            } else {
                let (c1, c2) = reduce(s[0], s[1], s[2]);
                [Some(s[0]), Some(s[1]), Some(s[2]), c1, c2]
            };
            w.write_record(row.map(fmt))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn reduce(a1: f64, b1: f64, b2: f64) -> (Option<f64>, Option<f64>) {
    if a1 > 0.0 && a1 < 1.0 {
        (Some(b2 - b1), Some(-0.5 * (b2 * b2 - b1 * b1) + ((1.0 - a1) / a1).ln()))
    } else {
        (None, None)
    }
}

/// Observed-data log posterior in the sampler's coordinates, evaluated with
/// scalar arithmetic only.
struct Target {
    model: ModelId,
    labeled: Vec<(f64, usize)>,
    lab_factor: Factor,
    unlabeled: Vec<f64>,
    prior: PriorSpec,
    sigma: f64,
}

impl Target {
    fn new(model: ModelId, data: &Dataset, prior: &PriorSpec, sigma: f64) -> Self {
        let (lab, unl) = observed_factors(model);
        Target {
            model,
            labeled: data.x1().iter().copied().zip(data.y1().iter().copied()).collect(),
            lab_factor: lab,
            unlabeled: if unl.is_some() { data.x2().to_vec() } else { Vec::new() },
            prior: prior.clone(),
            sigma,
        }
    }

    fn log_density(&self, th: &[f64]) -> f64 {
        if self.model.uses_reduced() {
            let s = self.prior.reduced_scale;
            let lp: f64 = th.iter().map(|c| -0.5 * (c / s).powi(2) - 0.5 * LN_2PI - s.ln()).sum();
            let ll: f64 = self
                .labeled
                .iter()
                .map(|&(x, y)| {
                    let z = th[0] * x + th[1];
                    if y == 1 {
                        -softplus(z)
                    } else {
                        -softplus(-z)
                    }
                })
                .sum();
            return lp + ll;
        }
        let (t, b1, b2) = (th[0], th[1], th[2]);
        if self.prior.ordered_means && b1 >= b2 {
            return f64::NEG_INFINITY;
        }
        let la = -softplus(-t);
        let l1a = -softplus(t);
        let eta = &self.prior.concentration;
        // Dirichlet in a1 plus the logit Jacobian a1 (1 - a1)
        let mut lp = self.prior.dirichlet_log_norm() + eta[0] * la + eta[1] * l1a;
        if self.prior.ordered_means {
            lp += std::f64::consts::LN_2;
        }
        let s = self.prior.mean_scale;
        for b in [b1, b2] {
            lp += log_normal_1d(b, self.prior.mean_location, s);
        }
        let sg = self.sigma;
        let mut ll = 0.0;
        for &(x, y) in &self.labeled {
            let j1 = la + log_normal_1d(x, b1, sg);
            let j2 = l1a + log_normal_1d(x, b2, sg);
            let marg = crate::numeric::log_add_exp(j1, j2);
            let own = if y == 1 { j1 } else { j2 };
            ll += match self.lab_factor {
                Factor::Joint => own,
                Factor::Conditional => own - marg,
                Factor::Marginal => marg,
            };
        }
        for &x in &self.unlabeled {
            ll += crate::numeric::log_add_exp(la + log_normal_1d(x, b1, sg), l1a + log_normal_1d(x, b2, sg));
        }
        lp + ll
    }
}

fn model_index(model: ModelId) -> u64 {
    ModelId::ALL.iter().position(|&m| m == model).expect("listed model") as u64
}

fn initial_state(model: ModelId, data: &Dataset) -> Vec<f64> {
    if model.uses_reduced() {
        return vec![0.0, 0.0];
    }
    let xs: Vec<f64> = data.x1().iter().chain(data.x2()).copied().collect();
    if xs.is_empty() {
        return vec![0.0, -0.5, 0.5];
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt().max(0.5);
    vec![0.0, mean - 0.5 * sd, mean + 0.5 * sd]
}

/// Samples `p(w | D)` for `model`. The random stream depends on `seed` and on
/// the model, so the four chains of one replication never share draws.
pub fn mcmc_posterior(
    model: ModelId,
    data: &Dataset,
    prior: &PriorSpec,
    config: &McmcConfig,
    sigma: f64,
    seed: u64,
) -> Result<SampleChain> {
    config.validate()?;
    prior.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    if !model.uses_reduced() && prior.concentration.len() != 2 {
        return Err(Error::Unsupported("the sampler handles two scalar components".into()));
    }
    let target = Target::new(model, data, prior, sigma);
    let mut rng = rng_for(seed, stream::offset(stream::MCMC, model_index(model)));

    let mut th = initial_state(model, data);
    let d = th.len();
    let mut lp = target.log_density(&th);
    if !lp.is_finite() {
        return Err(Error::domain("initial state has zero posterior density"));
    }
    let mut log_step = vec![config.initial_step.ln(); d];
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut samples = Vec::with_capacity(config.retained());
    let swap = config.label_swap && !model.uses_reduced();

    for it in 0..config.iterations {
        let adapting = it < config.burn_in;
        for j in 0..d {
            let old = th[j];
            let z: f64 = rng.sample(StandardNormal);
            th[j] = old + log_step[j].exp() * z;
            let cand = target.log_density(&th);
            let u: f64 = rng.random();
            let ok = cand.is_finite() && u.ln() < cand - lp;
            if ok {
                lp = cand;
            } else {
                th[j] = old;
            }
            if adapting {
                let gain = (it as f64 + 1.0).powf(-0.6);
                log_step[j] += gain * (f64::from(u8::from(ok)) - config.target_acceptance);
            } else {
                proposed += 1;
                accepted += usize::from(ok);
            }
        }
        if swap {
            let cand_th = [-th[0], th[2], th[1]];
            let cand = target.log_density(&cand_th);
            let u: f64 = rng.random();
            if cand.is_finite() && u.ln() < cand - lp {
                th.copy_from_slice(&cand_th);
                lp = cand;
            }
        }
        if !adapting && (it + 1 - config.burn_in).is_multiple_of(config.thin) {
            samples.push(if model.uses_reduced() {
                th.clone()
            } else {
                vec![sigmoid(th[0]), th[1], th[2]]
            });
        }
    }

    let acceptance_rate = if proposed == 0 {
        0.0
    } else {
        accepted as f64 / proposed as f64
    };
    Ok(SampleChain {
        model,
        samples,
        acceptance_rate,
        step_scales: log_step.iter().map(|s| s.exp()).collect(),
        seed,
        sigma,
        flagged: !(acceptance_rate > ACCEPTANCE_BAND.0 && acceptance_rate < ACCEPTANCE_BAND.1),
    })
}

/// Chain average of the reduced parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMean {
    pub c1: f64,
    pub c2: f64,
    /// Samples dropped because `a1` rounded onto the simplex boundary.
    pub excluded: usize,
}

/// Largest tolerated fraction of samples without a finite reduced image.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;

pub fn posterior_mean_reduced(chain: &SampleChain) -> Result<ReducedMean> {
    if chain.samples.is_empty() {
        return Err(Error::precondition("empty chain"));
    }
    let (mut s1, mut s2, mut kept) = (0.0, 0.0, 0usize);
    for s in &chain.samples {
        let (c1, c2) = if chain.model.uses_reduced() {
            (Some(s[0]), Some(s[1]))
        } else {
            reduce(s[0], s[1], s[2])
        };
        if let (Some(c1), Some(c2)) = (c1, c2) {
            if c1.is_finite() && c2.is_finite() {
                s1 += c1;
                s2 += c2;
                kept += 1;
            }
        }
    }
    let excluded = chain.samples.len() - kept;
    if excluded as f64 > MAX_EXCLUDED_FRACTION * chain.samples.len() as f64 {
        return Err(Error::domain(format!(
            "{excluded} of {} samples have no finite reduced image",
            chain.samples.len()
        )));
    }
    Ok(ReducedMean {
        c1: s1 / kept as f64,
        c2: s2 / kept as f64,
        excluded,
    })
}

/// Kolmogorov-Smirnov distance between `samples` and a grid marginal given
/// as `(node, mass)` pairs. Each node's mass is spread uniformly over the
/// cell between the midpoints to its neighbours.
pub fn ks_distance(samples: &[f64], marginal: &[(f64, f64)]) -> Result<f64> {
    if samples.is_empty() || marginal.len() < 2 {
        return Err(Error::precondition("ks_distance needs samples and at least two nodes"));
    }
    let total: f64 = marginal.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(Error::precondition("marginal has no mass"));
    }
    let k = marginal.len();
    let mut edges = Vec::with_capacity(k + 1);
    edges.push(marginal[0].0 - 0.5 * (marginal[1].0 - marginal[0].0));
    for w in marginal.windows(2) {
        edges.push(0.5 * (w[0].0 + w[1].0));
    }
    edges.push(marginal[k - 1].0 + 0.5 * (marginal[k - 1].0 - marginal[k - 2].0));
    let mut cum = Vec::with_capacity(k + 1);
    cum.push(0.0);
    for (_, m) in marginal {
        cum.push(cum.last().unwrap() + m / total);
    }
    let cdf = |x: f64| -> f64 {
        if x <= edges[0] {
            return 0.0;
        }
        if x >= edges[k] {
            return 1.0;
        }
        let i = edges.partition_point(|&e| e <= x) - 1;
        let f = (x - edges[i]) / (edges[i + 1] - edges[i]);
        cum[i] + f * (cum[i + 1] - cum[i])
    };
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}
