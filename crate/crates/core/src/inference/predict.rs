//! The latent-label predictor `p(Y2 | D)` and the per-dataset KL error.
//!
//! Every predictor used here is a weighted mixture over parameter values of
//! factorized classifiers: grid nodes weighted by posterior mass, MCMC
//! samples weighted equally, or the single true parameter.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::grid::{GridPosterior, Layout};
use super::mcmc::SampleChain;
use super::MAX_ENUMERATION;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{MixtureParams, ModelId, Params};
use crate::numeric::{log_normal_1d, log_sum_exp, softplus};
use crate::rng::{rng_for, stream};

/// `p(Y2 | D) = Σ_k w_k Π_i p(y_i | x_i, θ_k)`.
#[derive(Debug, Clone)]
pub struct LatentPredictor {
    /// Normalized log weights of the components.
    log_w: Vec<f64>,
    /// `ln p(y=1 | x_i, θ_k)` and `ln p(y=2 | x_i, θ_k)` per point `i`.
    lp: Vec<[Vec<f64>; 2]>,
}

fn classifier_logs(z: f64) -> (f64, f64) {
    // z is the log-odds of label 1
    (-softplus(-z), -softplus(z))
}

impl LatentPredictor {
    /// Posterior node masses times classifier products, on the grid measure.
    pub fn from_grid(post: &GridPosterior, x2: &[f64], prune_nats: Option<f64>) -> Result<Self> {
        let masses = post.log_masses();
        let top = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = prune_nats.map_or(f64::NEG_INFINITY, |p| top - p);
        let kept: Vec<usize> = (0..masses.len()).filter(|&k| masses[k] > floor).collect();
        let kept_mass: Vec<f64> = kept.iter().map(|&k| masses[k]).collect();
        let lz = log_sum_exp(&kept_mass);
        let log_w = kept_mass.iter().map(|m| m - lz).collect();
        let sigma = post.sigma;
        let lp = x2
            .iter()
            .map(|&x| {
                let (l1, l2): (Vec<f64>, Vec<f64>) = kept
                    .iter()
                    .map(|&k| {
                        let ix = post.unravel(k);
                        let z = match post.layout() {
                            Layout::Full(l) => {
                                l.la[ix[0]] - l.l1a[ix[0]] + log_normal_1d(x, l.b1[ix[1]], sigma)
                                    - log_normal_1d(x, l.b2[ix[2]], sigma)
                            }
                            Layout::Reduced(l) => -(l.axes[0].values[ix[0]] * x + l.axes[1].values[ix[1]]),
                        };
                        classifier_logs(z)
                    })
                    .unzip();
                [l1, l2]
            })
            .collect();
        Ok(LatentPredictor { log_w, lp })
    }

    /// Chain average of classifier products.
    pub fn from_chain(chain: &SampleChain, x2: &[f64]) -> Result<Self> {
        if chain.samples.is_empty() {
            return Err(Error::precondition("empty chain"));
        }
        let s = chain.samples.len();
        let log_w = vec![-(s as f64).ln(); s];
        let lp = x2
            .iter()
            .map(|&x| {
                let (l1, l2): (Vec<f64>, Vec<f64>) = chain
                    .samples
                    .iter()
                    .map(|th| {
                        let z = if chain.model.uses_reduced() {
                            -(th[0] * x + th[1])
                        } else {
                            let (a1, b1, b2) = (th[0], th[1], th[2]);
                            a1.ln() - (1.0 - a1).ln() + log_normal_1d(x, b1, chain.sigma)
                                - log_normal_1d(x, b2, chain.sigma)
                        };
                        classifier_logs(z)
                    })
                    .unzip();
                [l1, l2]
            })
            .collect();
        Ok(LatentPredictor { log_w, lp })
    }

    /// The true conditional `q(Y2 | X2)`.
    pub fn truth(truth: &MixtureParams, x2: &[f64]) -> Result<Self> {
        let [a1, b1, b2] = truth.as_triple()?;
        let s = truth.sigma();
        let lp = x2
            .iter()
            .map(|&x| {
                let (l1, l2) = if a1 == 1.0 {
                    (0.0, f64::NEG_INFINITY)
                } else if a1 == 0.0 {
                    (f64::NEG_INFINITY, 0.0)
                } else {
                    classifier_logs(a1.ln() - (1.0 - a1).ln() + log_normal_1d(x, b1, s) - log_normal_1d(x, b2, s))
                };
                [vec![l1], vec![l2]]
            })
            .collect();
        Ok(LatentPredictor { log_w: vec![0.0], lp })
    }

    /// A single parameter value, e.g. a plug-in estimate.
    pub fn point(params: &Params, x2: &[f64]) -> Result<Self> {
        match params {
            Params::Full(w) => LatentPredictor::truth(w, x2),
            Params::Reduced(wbar) => Ok(LatentPredictor {
                log_w: vec![0.0],
                lp: x2
                    .iter()
                    .map(|&x| {
                        let (l1, l2) = classifier_logs(-(wbar.c1 * x + wbar.c2));
                        [vec![l1], vec![l2]]
                    })
                    .collect(),
            }),
        }
    }

    pub fn n_latent(&self) -> usize {
        self.lp.len()
    }

    pub fn components(&self) -> usize {
        self.log_w.len()
    }

    /// `ln p(Y2 | D)` for one assignment.
    pub fn log_predict(&self, y2: &[usize]) -> Result<f64> {
        if y2.len() != self.lp.len() {
            return Err(Error::precondition(format!(
                "assignment has {} labels for {} latent points",
                y2.len(),
                self.lp.len()
            )));
        }
        for &y in y2 {
            if !(1..=2).contains(&y) {
                return Err(Error::domain(format!("label {y} outside 1..=2")));
            }
        }
        let terms: Vec<f64> = (0..self.log_w.len())
            .map(|k| self.log_w[k] + y2.iter().zip(&self.lp).map(|(&y, lp)| lp[y - 1][k]).sum::<f64>())
            .collect();
        Ok(log_sum_exp(&terms))
    }

    /// `ln p(Y2 | D)` for all `2^m` assignments, in the order of
    /// [`crate::data::binary_assignments`].
    pub fn log_predict_all(&self) -> Result<Vec<f64>> {
        let m = self.lp.len();
        if m > MAX_ENUMERATION {
            return Err(Error::EnumerationTooLarge {
                size: m,
                limit: MAX_ENUMERATION,
            });
        }
        let mut out = vec![0.0; 1 << m];
        if m == 0 {
            return Ok(out);
        }
        let top = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_w.iter().map(|v| (v - top).exp()).collect();
        let p: Vec<[Vec<f64>; 2]> = self
            .lp
            .iter()
            .map(|[a, b]| [a.iter().map(|v| v.exp()).collect(), b.iter().map(|v| v.exp()).collect()])
            .collect();
        let mut bufs = vec![vec![0.0; w.len()]; m];
        descend(&p, 0, 0, &w, &mut bufs, &mut out);
        for v in &mut out {
            *v = v.ln() + top;
        }
        Ok(out)
    }
}

/// Depth-first product accumulation. `bufs[0]` is scratch for this level;
/// leaves write `Σ_k v_k p_k` into `out`.
fn descend(p: &[[Vec<f64>; 2]], depth: usize, code: usize, v: &[f64], bufs: &mut [Vec<f64>], out: &mut [f64]) {
    if depth == p.len() - 1 {
        for y in 0..2 {
            out[code | (y << depth)] = v.iter().zip(&p[depth][y]).map(|(a, b)| a * b).sum();
        }
        return;
    }
    let (head, tail) = bufs.split_first_mut().expect("one buffer per level");
    for y in 0..2 {
        for ((b, a), q) in head.iter_mut().zip(v).zip(&p[depth][y]) {
            *b = a * q;
        }
        descend(p, depth + 1, code | (y << depth), head, tail, out);
    }
}

/// `ln p(Y2 | D)` for one assignment from an MCMC chain.
pub fn log_predict_y2_mc(model: ModelId, chain: &SampleChain, x2: &[f64], y2: &[usize]) -> Result<f64> {
    if chain.model != model {
        return Err(Error::precondition(format!(
            "chain was drawn for {} but {model} was requested",
            chain.model
        )));
    }
    LatentPredictor::from_chain(chain, x2)?.log_predict(y2)
}

/// Exact per-latent-variable KL error of `predictor` on `data`:
/// `Σ_{Y2} q(Y2|D) ln[q(Y2|D) / p(Y2|D)] / |X2|`.
pub fn kl_error_exact(data: &Dataset, truth: &MixtureParams, predictor: &LatentPredictor) -> Result<f64> {
    let m = data.n_unlabeled();
    if predictor.n_latent() != m {
        return Err(Error::precondition("predictor was built for a different X2"));
    }
    if m > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge {
            size: m,
            limit: MAX_ENUMERATION,
        });
    }
    if m == 0 {
        return Ok(0.0);
    }
    let lq = LatentPredictor::truth(truth, data.x2())?.log_predict_all()?;
    let lp = predictor.log_predict_all()?;
    let total: f64 = lq
        .iter()
        .zip(&lp)
        .filter(|(q, _)| **q > f64::NEG_INFINITY)
        .map(|(q, p)| q.exp() * (q - p))
        .sum();
    Ok(total / m as f64)
}

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
}

pub const MIN_KL_DRAWS: usize = 100;

/// Monte-Carlo KL error: `Y2` drawn from `q(Y2 | X2)`, averaging
/// `[ln q(Y2|X2) - ln p(Y2|D)] / |X2|`.
pub fn kl_error_mc(
    data: &Dataset,
    truth: &MixtureParams,
    predictor: &LatentPredictor,
    y2_draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    if y2_draws < MIN_KL_DRAWS {
        return Err(Error::precondition(format!(
            "need at least {MIN_KL_DRAWS} draws, got {y2_draws}"
        )));
    }
    let m = data.n_unlabeled();
    if predictor.n_latent() != m {
        return Err(Error::precondition("predictor was built for a different X2"));
    }
    if m == 0 {
        return Ok(McEstimate {
            mean: 0.0,
            std_error: 0.0,
            draws: y2_draws,
        });
    }
    let q = LatentPredictor::truth(truth, data.x2())?;
    let p1: Vec<f64> = q.lp.iter().map(|lp| lp[0][0].exp()).collect();
    let mut rng = rng_for(seed, stream::KL_DRAWS);
    let draws: Vec<Vec<usize>> = (0..y2_draws)
        .map(|_| {
            p1.iter()
                .map(|&p| if rng.random::<f64>() < p { 1 } else { 2 })
                .collect()
        })
        .collect();
    // evaluate each distinct assignment once
    let mut cache: BTreeMap<&[usize], f64> = BTreeMap::new();
    for y in &draws {
        if !cache.contains_key(y.as_slice()) {
            let v = (q.log_predict(y)? - predictor.log_predict(y)?) / m as f64;
            cache.insert(y.as_slice(), v);
        }
    }
    let stats: crate::numeric::RunningStats = draws.iter().map(|y| cache[y.as_slice()]).collect();
    Ok(McEstimate {
        mean: stats.mean(),
        std_error: stats.std_error(),
        draws: y2_draws,
    })
}
