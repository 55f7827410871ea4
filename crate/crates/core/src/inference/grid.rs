//! Tensor-grid posterior: the exact oracle for small `n`.
//!
//! Each axis is a trapezoid rule on `u ∈ [-1, 1]` pushed through
//! `x = c + L sinh(s u) / sinh(s)`, which packs nodes near the centre and
//! still reaches far into the tails. `s = 0` gives a uniform grid. The
//! mixing weight is gridded in logit coordinates so both simplex ends are
//! covered. Trapezoid sums of smooth, decaying integrands converge
//! geometrically, so modest node counts reach the convergence contract.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{full_factors, observed_factors, Factor, MixtureParams, ModelId, Params, PriorSpec, ReducedParams};
use crate::numeric::{log_add_exp, log_normal_1d, sigmoid, softplus};

/// Number of cells next to each face that count as the boundary layer.
pub const BOUNDARY_CELLS: usize = 4;
/// Largest posterior mass tolerated in the boundary layer.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;
/// Largest change of the log normalizer under node refinement.
pub const CONVERGENCE_TOL: f64 = 1e-6;
pub const MIN_AXIS_NODES: usize = 17;

/// One grid axis: `[lower, upper]`, node count and sinh stretch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
    #[serde(default)]
    pub stretch: f64,
}

impl AxisSpec {
    pub const fn new(lower: f64, upper: f64, nodes: usize, stretch: f64) -> Self {
        AxisSpec {
            lower,
            upper,
            nodes,
            stretch,
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::config(field, "need finite lower < upper"));
        }
        if self.nodes < MIN_AXIS_NODES {
            return Err(Error::config(
                format!("{field}.nodes"),
                format!("need at least {MIN_AXIS_NODES} nodes, got {}", self.nodes),
            ));
        }
        if !(self.stretch >= 0.0 && self.stretch <= 20.0) {
            return Err(Error::config(format!("{field}.stretch"), "must lie in [0, 20]"));
        }
        Ok(())
    }

    /// Halves the spacing; the old nodes stay nodes.
    pub fn refined(&self) -> Self {
        AxisSpec {
            nodes: 2 * self.nodes - 1,
            ..*self
        }
    }

    /// Node coordinates and log quadrature weights.
    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes;
        let c = 0.5 * (self.lower + self.upper);
        let l = 0.5 * (self.upper - self.lower);
        let du = 2.0 / (n - 1) as f64;
        let s = self.stretch;
        (0..n)
            .map(|i| {
                // index from both ends so the rule is exactly symmetric
                let u = if 2 * i < n {
                    -1.0 + i as f64 * du
                } else {
                    1.0 - (n - 1 - i) as f64 * du
                };
                let (x, dx) = if s == 0.0 {
                    (c + l * u, l)
                } else {
                    (c + l * (s * u).sinh() / s.sinh(), l * s * (s * u).cosh() / s.sinh())
                };
                let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                (x, (end * du * dx).ln())
            })
            .unzip()
    }
}

/// Axes and numerical contracts for grid posteriors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Axis for `ln(a1 / (1 - a1))`.
    pub logit_a1: AxisSpec,
    pub b1: AxisSpec,
    pub b2: AxisSpec,
    pub c1: AxisSpec,
    pub c2: AxisSpec,
    /// Known component standard deviation used at every node.
    pub sigma: f64,
    /// Rebuild on the refined grid and require the log normalizer to move by
    /// less than [`CONVERGENCE_TOL`]. Costs about eight times the base grid.
    pub check_convergence: bool,
    /// Nodes more than this many nats below the heaviest one are dropped
    /// when enumerating label assignments; `None` keeps every node.
    pub prune_nats: Option<f64>,
}

impl Default for GridSpec {
    /// Sized for the default prior (mean and reduced scales 10).
    fn default() -> Self {
        GridSpec {
            logit_a1: AxisSpec::new(-30.0, 30.0, 61, 3.0),
            b1: AxisSpec::new(-80.0, 80.0, 121, 4.5),
            b2: AxisSpec::new(-80.0, 80.0, 121, 4.5),
            c1: AxisSpec::new(-80.0, 80.0, 241, 4.5),
            c2: AxisSpec::new(-80.0, 80.0, 241, 4.5),
            sigma: 1.0,
            check_convergence: false,
            prune_nats: None,
        }
    }
}

impl GridSpec {
    /// A lighter grid that is adequate when the prior scales are at most 3.
    pub fn compact() -> Self {
        GridSpec {
            logit_a1: AxisSpec::new(-30.0, 30.0, 61, 3.0),
            b1: AxisSpec::new(-30.0, 30.0, 81, 3.0),
            b2: AxisSpec::new(-30.0, 30.0, 81, 3.0),
            c1: AxisSpec::new(-30.0, 30.0, 161, 3.0),
            c2: AxisSpec::new(-30.0, 30.0, 161, 3.0),
            ..GridSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.logit_a1.validate("grid.logit_a1")?;
        self.b1.validate("grid.b1")?;
        self.b2.validate("grid.b2")?;
        self.c1.validate("grid.c1")?;
        self.c2.validate("grid.c2")?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("grid.sigma", "must be positive"));
        }
        if let Some(p) = self.prune_nats {
            if !(p > 0.0) {
                return Err(Error::config("grid.prune_nats", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn refined(&self) -> Self {
        GridSpec {
            logit_a1: self.logit_a1.refined(),
            b1: self.b1.refined(),
            b2: self.b2.refined(),
            c1: self.c1.refined(),
            c2: self.c2.refined(),
            ..self.clone()
        }
    }

    /// Whether `w` lies strictly inside the box with at least the boundary layer to spare.
    pub fn contains(&self, w: &MixtureParams) -> Result<bool> {
        let [a1, b1, b2] = w.as_triple()?;
        let t = (a1 / (1.0 - a1)).ln();
        let inside = |ax: &AxisSpec, v: f64| {
            let (x, _) = ax.points();
            v > x[BOUNDARY_CELLS] && v < x[x.len() - 1 - BOUNDARY_CELLS]
        };
        Ok(inside(&self.logit_a1, t) && inside(&self.b1, b1) && inside(&self.b2, b2))
    }
}

/// Node coordinates along one parameter with their log quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: &'static str,
    pub values: Vec<f64>,
    pub log_measure: Vec<f64>,
}

/// Per-point factor list of a likelihood.
pub(crate) type Points = Vec<(Factor, f64, usize)>;

pub(crate) fn observed_points(model: ModelId, data: &Dataset) -> Points {
    let (lab, unl) = observed_factors(model);
    let mut pts: Points = data.x1().iter().zip(data.y1()).map(|(&x, &y)| (lab, x, y)).collect();
    if let Some(f) = unl {
        pts.extend(data.x2().iter().map(|&x| (f, x, 1)));
    }
    pts
}

pub(crate) fn full_points(model: ModelId, data: &Dataset, y2: &[usize]) -> Result<Points> {
    if y2.len() != data.n_unlabeled() {
        return Err(Error::precondition(format!(
            "assignment has {} labels for {} unlabeled points",
            y2.len(),
            data.n_unlabeled()
        )));
    }
    let (lab, unl) = full_factors(model);
    let mut pts: Points = data.x1().iter().zip(data.y1()).map(|(&x, &y)| (lab, x, y)).collect();
    pts.extend(data.x2().iter().zip(y2).map(|(&x, &y)| (unl, x, y)));
    Ok(pts)
}

/// Node geometry of the full `(a1, b1, b2)` grid.
#[derive(Debug, Clone)]
pub(crate) struct FullLayout {
    pub la: Vec<f64>,
    pub l1a: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub axes: [GridAxis; 3],
}

impl FullLayout {
    fn new(spec: &GridSpec) -> Self {
        let (t, lm_t) = spec.logit_a1.points();
        let la: Vec<f64> = t.iter().map(|&t| -softplus(-t)).collect();
        let l1a: Vec<f64> = t.iter().map(|&t| -softplus(t)).collect();
        let lm_a = lm_t
            .iter()
            .zip(la.iter().zip(&l1a))
            .map(|(m, (p, q))| m + p + q)
            .collect();
        let a1 = t.iter().map(|&t| sigmoid(t)).collect();
        let (b1, lm_b1) = spec.b1.points();
        let (b2, lm_b2) = spec.b2.points();
        FullLayout {
            axes: [
                GridAxis {
                    name: "a1",
                    values: a1,
                    log_measure: lm_a,
                },
                GridAxis {
                    name: "b1",
                    values: b1.clone(),
                    log_measure: lm_b1,
                },
                GridAxis {
                    name: "b2",
                    values: b2.clone(),
                    log_measure: lm_b2,
                },
            ],
            la,
            l1a,
            b1,
            b2,
        }
    }
}

fn gaussian_prior(v: f64, loc: f64, scale: f64) -> f64 {
    log_normal_1d(v, loc, scale)
}

/// `log prior + log likelihood` at every node of the full grid.
fn full_log_weights(
    lay: &FullLayout,
    prior: &PriorSpec,
    sigma: f64,
    points: &[(Factor, f64, usize)],
) -> Result<Vec<f64>> {
    if prior.concentration.len() != 2 {
        return Err(Error::Unsupported("grid posteriors need two components".into()));
    }
    let (na, nb1, nb2) = (lay.la.len(), lay.b1.len(), lay.b2.len());
    let (e1, e2) = (prior.concentration[0], prior.concentration[1]);
    let mut sa: Vec<f64> = (0..na)
        .map(|i| prior.dirichlet_log_norm() + (e1 - 1.0) * lay.la[i] + (e2 - 1.0) * lay.l1a[i])
        .collect();
    let mut sb1: Vec<f64> = lay
        .b1
        .iter()
        .map(|&b| gaussian_prior(b, prior.mean_location, prior.mean_scale))
        .collect();
    let mut sb2: Vec<f64> = lay
        .b2
        .iter()
        .map(|&b| gaussian_prior(b, prior.mean_location, prior.mean_scale))
        .collect();

    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for &(factor, x, y) in points {
        if matches!(factor, Factor::Joint | Factor::Conditional) {
            match y {
                1 => {
                    sa.iter_mut().zip(&lay.la).for_each(|(s, l)| *s += l);
                    sb1.iter_mut()
                        .zip(&lay.b1)
                        .for_each(|(s, &b)| *s += log_normal_1d(x, b, sigma));
                }
                2 => {
                    sa.iter_mut().zip(&lay.l1a).for_each(|(s, l)| *s += l);
                    sb2.iter_mut()
                        .zip(&lay.b2)
                        .for_each(|(s, &b)| *s += log_normal_1d(x, b, sigma));
                }
                _ => return Err(Error::domain(format!("label {y} outside 1..=2"))),
            }
        }
        match factor {
            Factor::Marginal => plus.push(x),
            Factor::Conditional => minus.push(x),
            Factor::Joint => {}
        }
    }
    // per-point Gaussian tables laid out [node][point] for the inner loop
    let table = |bs: &[f64], xs: &[f64]| -> Vec<f64> {
        bs.iter()
            .flat_map(|&b| xs.iter().map(move |&x| log_normal_1d(x, b, sigma)))
            .collect()
    };
    let (np, nm) = (plus.len(), minus.len());
    let (p1, p2) = (table(&lay.b1, &plus), table(&lay.b2, &plus));
    let (m1, m2) = (table(&lay.b1, &minus), table(&lay.b2, &minus));
    let ordered = prior.ordered_means;

    let mut lw = vec![0.0; na * nb1 * nb2];
    lw.par_chunks_mut(nb1 * nb2).enumerate().for_each(|(ia, block)| {
        let (la, l1a) = (lay.la[ia], lay.l1a[ia]);
        for ib1 in 0..nb1 {
            let row = &mut block[ib1 * nb2..(ib1 + 1) * nb2];
            let (g1p, g1m) = (&p1[ib1 * np..(ib1 + 1) * np], &m1[ib1 * nm..(ib1 + 1) * nm]);
            for (ib2, cell) in row.iter_mut().enumerate() {
                if ordered && lay.b1[ib1] >= lay.b2[ib2] {
                    *cell = f64::NEG_INFINITY;
                    continue;
                }
                let mut v = sa[ia] + sb1[ib1] + sb2[ib2];
                let g2p = &p2[ib2 * np..(ib2 + 1) * np];
                for k in 0..np {
                    v += log_add_exp(la + g1p[k], l1a + g2p[k]);
                }
                let g2m = &m2[ib2 * nm..(ib2 + 1) * nm];
                for k in 0..nm {
                    v -= log_add_exp(la + g1m[k], l1a + g2m[k]);
                }
                if ordered {
                    v += std::f64::consts::LN_2;
                }
                *cell = v;
            }
        }
    });
    Ok(lw)
}

/// Node geometry of the reduced `(c1, c2)` grid.
#[derive(Debug, Clone)]
pub(crate) struct ReducedLayout {
    pub axes: [GridAxis; 2],
}

impl ReducedLayout {
    fn new(spec: &GridSpec) -> Self {
        let (c1, lm1) = spec.c1.points();
        let (c2, lm2) = spec.c2.points();
        ReducedLayout {
            axes: [
                GridAxis {
                    name: "c1",
                    values: c1,
                    log_measure: lm1,
                },
                GridAxis {
                    name: "c2",
                    values: c2,
                    log_measure: lm2,
                },
            ],
        }
    }
}

fn reduced_log_weights(lay: &ReducedLayout, prior: &PriorSpec, points: &[(Factor, f64, usize)]) -> Result<Vec<f64>> {
    let [c1, c2] = [&lay.axes[0].values, &lay.axes[1].values];
    let mut labelled = Vec::with_capacity(points.len());
    for &(factor, x, y) in points {
        if factor != Factor::Conditional {
            return Err(Error::domain("the reduced model has only conditional factors"));
        }
        let sign = match y {
            1 => 1.0,
            2 => -1.0,
            _ => return Err(Error::domain(format!("label {y} outside 1..=2"))),
        };
        labelled.push((x, sign));
    }
    let s = prior.reduced_scale;
    let mut lw = vec![0.0; c1.len() * c2.len()];
    lw.par_chunks_mut(c2.len()).enumerate().for_each(|(i, row)| {
        let p1 = log_normal_1d(c1[i], 0.0, s);
        for (j, cell) in row.iter_mut().enumerate() {
            let mut v = p1 + log_normal_1d(c2[j], 0.0, s);
            for &(x, sign) in &labelled {
                v -= softplus(sign * (c1[i] * x + c2[j]));
            }
            *cell = v;
        }
    });
    Ok(lw)
}

#[derive(Debug, Clone)]
pub(crate) enum Layout {
    Full(FullLayout),
    Reduced(ReducedLayout),
}

impl Layout {
    pub(crate) fn new(model: ModelId, spec: &GridSpec) -> Self {
        if model.uses_reduced() {
            Layout::Reduced(ReducedLayout::new(spec))
        } else {
            Layout::Full(FullLayout::new(spec))
        }
    }

    pub(crate) fn axes(&self) -> &[GridAxis] {
        match self {
            Layout::Full(l) => &l.axes,
            Layout::Reduced(l) => &l.axes,
        }
    }

    fn log_weights(&self, prior: &PriorSpec, sigma: f64, points: &[(Factor, f64, usize)]) -> Result<Vec<f64>> {
        match self {
            Layout::Full(l) => full_log_weights(l, prior, sigma, points),
            Layout::Reduced(l) => reduced_log_weights(l, prior, points),
        }
    }

    /// `ln Σ exp(lw + log measure)` with a deterministic blockwise reduction.
    fn log_integral(&self, lw: &[f64]) -> f64 {
        let axes = self.axes();
        let inner: usize = axes[1..].iter().map(|a| a.values.len()).product();
        let measure = |idx: usize| -> f64 {
            let mut rem = idx;
            let mut m = 0.0;
            for ax in axes.iter().rev() {
                let n = ax.values.len();
                m += ax.log_measure[rem % n];
                rem /= n;
            }
            m
        };
        let blocks: Vec<(f64, f64)> = lw
            .par_chunks(inner)
            .enumerate()
            .map(|(b, chunk)| {
                let base = b * inner;
                let mx = chunk
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v + measure(base + k))
                    .fold(f64::NEG_INFINITY, f64::max);
                if mx == f64::NEG_INFINITY {
                    return (mx, 0.0);
                }
                let s = chunk
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (v + measure(base + k) - mx).exp())
                    .sum();
                (mx, s)
            })
            .collect();
        let mx = blocks.iter().map(|b| b.0).fold(f64::NEG_INFINITY, f64::max);
        if mx == f64::NEG_INFINITY {
            return mx;
        }
        mx + blocks.iter().map(|&(m, s)| s * (m - mx).exp()).sum::<f64>().ln()
    }
}

/// Log normalizer of `points` on the grid of `model`, without the boundary check.
pub(crate) fn log_evidence(
    model: ModelId,
    points: &[(Factor, f64, usize)],
    prior: &PriorSpec,
    spec: &GridSpec,
) -> Result<f64> {
    let layout = Layout::new(model, spec);
    let lw = layout.log_weights(prior, spec.sigma, points)?;
    Ok(layout.log_integral(&lw))
}

/// Normalized posterior on a tensor grid.
#[derive(Debug, Clone)]
pub struct GridPosterior {
    pub model: ModelId,
    layout: Layout,
    /// `ln φ(w) + ln L(w, D)` at every node, row-major over the axes.
    pub log_weights: Vec<f64>,
    /// `ln Σ exp(log_weights + log measure)`, the grid estimate of the evidence.
    pub log_normalizer: f64,
    /// Posterior mass within the boundary layer.
    pub boundary_mass: f64,
    /// Change of the log normalizer on the refined grid, when checked.
    pub convergence_delta: Option<f64>,
    pub sigma: f64,
}

impl GridPosterior {
    pub fn axes(&self) -> &[GridAxis] {
        self.layout.axes()
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Axis indices of a flat node index.
    pub fn unravel(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        let mut out: Vec<usize> = self
            .axes()
            .iter()
            .rev()
            .map(|ax| {
                let n = ax.values.len();
                let i = rem % n;
                rem /= n;
                i
            })
            .collect();
        out.reverse();
        out
    }

    pub fn node_log_measure(&self, idx: usize) -> f64 {
        self.unravel(idx)
            .iter()
            .zip(self.axes())
            .map(|(&i, ax)| ax.log_measure[i])
            .sum()
    }

    /// Normalized log posterior mass of every node.
    pub fn log_masses(&self) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.log_weights[i] + self.node_log_measure(i) - self.log_normalizer)
            .collect()
    }

    pub fn node_params(&self, idx: usize) -> Result<Params> {
        let ix = self.unravel(idx);
        let ax = self.axes();
        match &self.layout {
            Layout::Full(_) => Ok(Params::Full(MixtureParams::two_component(
                ax[0].values[ix[0]],
                ax[1].values[ix[1]],
                ax[2].values[ix[2]],
                self.sigma,
            )?)),
            Layout::Reduced(_) => Ok(Params::Reduced(ReducedParams::new(
                ax[0].values[ix[0]],
                ax[1].values[ix[1]],
            )?)),
        }
    }

    /// Marginal posterior masses along `axis`, as `(value, mass)` pairs.
    pub fn marginal(&self, axis: usize) -> Vec<(f64, f64)> {
        let ax = &self.axes()[axis];
        let mut mass = vec![0.0; ax.values.len()];
        for (idx, lm) in self.log_masses().into_iter().enumerate() {
            mass[self.unravel(idx)[axis]] += lm.exp();
        }
        ax.values.iter().copied().zip(mass).collect()
    }

    /// Posterior mean and variance of the coordinate on `axis`.
    pub fn moments(&self, axis: usize) -> (f64, f64) {
        let m = self.marginal(axis);
        let mean: f64 = m.iter().map(|(v, p)| v * p).sum();
        let var = m.iter().map(|(v, p)| p * (v - mean).powi(2)).sum();
        (mean, var)
    }

    fn boundary_mass_of(layout: &Layout, lw: &[f64], log_z: f64) -> f64 {
        let axes = layout.axes();
        let dims: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
        lw.par_iter()
            .enumerate()
            .map(|(idx, &v)| {
                let mut rem = idx;
                let mut m = 0.0;
                let mut edge = false;
                for (ax, &n) in axes.iter().zip(&dims).rev() {
                    let i = rem % n;
                    rem /= n;
                    m += ax.log_measure[i];
                    edge |= i < BOUNDARY_CELLS || i >= n - BOUNDARY_CELLS;
                }
                if edge {
                    (v + m - log_z).exp()
                } else {
                    0.0
                }
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }
}

/// Posterior `p(w | D) ∝ L(w, D) φ(w)` on the grid of `spec`.
pub fn grid_posterior(model: ModelId, data: &Dataset, prior: &PriorSpec, spec: &GridSpec) -> Result<GridPosterior> {
    grid_posterior_points(model, &observed_points(model, data), prior, spec)
}

pub(crate) fn grid_posterior_points(
    model: ModelId,
    points: &[(Factor, f64, usize)],
    prior: &PriorSpec,
    spec: &GridSpec,
) -> Result<GridPosterior> {
    spec.validate()?;
    prior.validate()?;
    let layout = Layout::new(model, spec);
    let lw = layout.log_weights(prior, spec.sigma, points)?;
    let log_z = layout.log_integral(&lw);
    if !log_z.is_finite() {
        return Err(Error::domain("grid log normalizer is not finite"));
    }
    let boundary_mass = GridPosterior::boundary_mass_of(&layout, &lw, log_z);
    if boundary_mass > BOUNDARY_MASS_TOL {
        return Err(Error::BoundaryLeak {
            mass: boundary_mass,
            cells: BOUNDARY_CELLS,
            threshold: BOUNDARY_MASS_TOL,
        });
    }
    let convergence_delta = if spec.check_convergence {
        let fine = log_evidence(model, points, prior, &spec.refined())?;
        let delta = (fine - log_z).abs();
        if !(delta < CONVERGENCE_TOL) {
            return Err(Error::NonConvergence {
                what: "grid log normalizer".into(),
                coarse: log_z,
                fine,
                change: delta,
                tol: CONVERGENCE_TOL,
            });
        }
        Some(delta)
    } else {
        None
    };
    Ok(GridPosterior {
        model,
        layout,
        log_weights: lw,
        log_normalizer: log_z,
        boundary_mass,
        convergence_delta,
        sigma: spec.sigma,
    })
}

/// `ln p(Y2 | D)` as the ratio of complete-data to observed-data evidence,
/// both integrated on the same grid so quadrature bias cancels.
pub fn log_predict_y2_grid(
    model: ModelId,
    data: &Dataset,
    y2: &[usize],
    prior: &PriorSpec,
    spec: &GridSpec,
) -> Result<f64> {
    let post = grid_posterior(model, data, prior, spec)?;
    let numer = log_evidence(model, &full_points(model, data, y2)?, prior, spec)?;
    Ok(numer - post.log_normalizer)
}

/// Log evidence with and without the hidden labels, for every assignment.
/// Entry `k` of the returned vector uses the assignment of
/// [`crate::data::binary_assignments`] number `k`.
pub fn log_evidence_table(
    model: ModelId,
    data: &Dataset,
    prior: &PriorSpec,
    spec: &GridSpec,
) -> Result<(f64, Vec<f64>)> {
    let m = data.n_unlabeled();
    if m > super::MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge {
            size: m,
            limit: super::MAX_ENUMERATION,
        });
    }
    let obs = grid_posterior(model, data, prior, spec)?.log_normalizer;
    let full = crate::data::binary_assignments(m)
        .map(|y2| log_evidence(model, &full_points(model, data, &y2)?, prior, spec))
        .collect::<Result<Vec<f64>>>()?;
    Ok((obs, full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample_dataset;
    use crate::model::{log_likelihood_full, log_likelihood_observed, log_prior};
    use crate::numeric::log_sum_exp;

    fn small_spec() -> GridSpec {
        GridSpec {
            logit_a1: AxisSpec::new(-30.0, 30.0, 41, 3.0),
            b1: AxisSpec::new(-30.0, 30.0, 81, 3.0),
            b2: AxisSpec::new(-30.0, 30.0, 81, 3.0),
            c1: AxisSpec::new(-30.0, 30.0, 121, 3.0),
            c2: AxisSpec::new(-30.0, 30.0, 121, 3.0),
            ..GridSpec::default()
        }
    }

    // the small grid is sized for this prior; scale 10 leaks past its edges
    fn test_prior() -> PriorSpec {
        PriorSpec {
            mean_scale: 3.0,
            reduced_scale: 3.0,
            ..PriorSpec::default()
        }
    }

    #[test]
    fn axis_rules() {
        let ax = AxisSpec::new(-2.0, 3.0, 101, 0.0);
        let (x, lw) = ax.points();
        assert_eq!((x[0], x[100]), (-2.0, 3.0));
        let total: f64 = lw.iter().map(|v| v.exp()).sum();
        assert!((total - 5.0).abs() < 1e-12);

        // a stretched axis still integrates a Gaussian to spectral accuracy
        let ax = AxisSpec::new(-40.0, 40.0, 81, 4.0);
        let (x, lw) = ax.points();
        let g: f64 = x
            .iter()
            .zip(&lw)
            .map(|(x, w)| (w + log_normal_1d(*x, 0.3, 1.0)).exp())
            .sum();
        assert!((g - 1.0).abs() < 1e-10, "{g}");
        let r = ax.refined();
        assert_eq!(r.points().0[2], x[1]);
    }

    #[test]
    fn empty_data_gives_prior() {
        let d = Dataset::from_parts(vec![], vec![], vec![], None, 0).unwrap();
        for model in ModelId::ALL {
            let p = grid_posterior(model, &d, &PriorSpec::default(), &GridSpec::default()).unwrap();
            assert!(p.log_normalizer.abs() < 1e-8, "{model}: {}", p.log_normalizer);
        }
    }

    #[test]
    fn node_weights_match_model_functions() {
        let d = sample_dataset(&MixtureParams::example_truth(), 8, 0.5, 3).unwrap();
        let prior = PriorSpec {
            concentration: vec![1.5, 2.0],
            ..test_prior()
        };
        for model in ModelId::ALL {
            let p = grid_posterior(model, &d, &prior, &small_spec()).unwrap();
            // interior in logit(a1): at the outer nodes the direct path rounds a1 to 1
            for idx in [1234usize, 5000, p.len() / 2 + 7, p.len() * 3 / 4 + 11] {
                let params = p.node_params(idx).unwrap();
                let direct = log_prior(&params, &prior).unwrap() + log_likelihood_observed(model, &d, &params).unwrap();
                let got = p.log_weights[idx];
                assert!(
                    (got - direct).abs() < 1e-9 * (1.0 + direct.abs()),
                    "{model} {idx}: {got} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn fully_labeled_model3_normalizer_by_direct_summation() {
        let truth = MixtureParams::example_truth();
        let full = sample_dataset(&truth, 4, 0.5, 9).unwrap();
        // every point labeled
        let mut x1 = full.x1().to_vec();
        x1.extend_from_slice(full.x2());
        let mut y1 = full.y1().to_vec();
        y1.extend_from_slice(full.y2().unwrap());
        let d = Dataset::from_parts(x1, y1, vec![], Some(vec![]), 9).unwrap();
        let spec = small_spec();
        let p = grid_posterior(ModelId::Model3, &d, &test_prior(), &spec).unwrap();
        let terms: Vec<f64> = (0..p.len())
            .map(|idx| {
                let params = p.node_params(idx).unwrap();
                log_prior(&params, &test_prior()).unwrap()
                    + log_likelihood_full(ModelId::Model3, &d, &params).unwrap()
                    + p.node_log_measure(idx)
            })
            .collect();
        assert!((log_sum_exp(&terms) - p.log_normalizer).abs() < 1e-9);
        // Model 1 sees the same labels through the classifier only
        let p1 = grid_posterior(ModelId::Model1, &d, &test_prior(), &spec).unwrap();
        assert!(p1.log_normalizer < 0.0 && p1.log_normalizer > p.log_normalizer);
    }

    #[test]
    fn label_swap_symmetry() {
        let d = sample_dataset(&MixtureParams::example_truth(), 6, 0.5, 21).unwrap();
        // a grid symmetric about zero in b maps onto itself under the swap
        let spec = small_spec();
        let prior = test_prior();
        let p = grid_posterior(ModelId::Model3, &d, &prior, &spec).unwrap();
        let q = grid_posterior(ModelId::Model3, &d.swap_labels(), &prior, &spec).unwrap();
        assert!((p.log_normalizer - q.log_normalizer).abs() < 1e-8);
        let (na, nb) = (p.axes()[0].values.len(), p.axes()[1].values.len());
        let idx = |a: usize, i: usize, j: usize| (a * nb + i) * nb + j;
        for (a, i, j) in [(20, 30, 35), (10, 25, 40), (33, 31, 29)] {
            let lhs = p.log_weights[idx(a, i, j)];
            let rhs = q.log_weights[idx(na - 1 - a, j, i)];
            assert!((lhs - rhs).abs() < 1e-8 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn boundary_leak_is_detected() {
        let d = sample_dataset(&MixtureParams::example_truth(), 8, 0.5, 2).unwrap();
        let narrow = GridSpec {
            b1: AxisSpec::new(-1.0, 1.0, 21, 0.0),
            ..small_spec()
        };
        match grid_posterior(ModelId::Model3, &d, &test_prior(), &narrow) {
            Err(Error::BoundaryLeak { mass, .. }) => assert!(mass > BOUNDARY_MASS_TOL),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn convergence_contract_on_default_grid() {
        let d = sample_dataset(&MixtureParams::example_truth(), 8, 0.5, 5).unwrap();
        let spec = GridSpec {
            check_convergence: true,
            ..GridSpec::default()
        };
        for model in [ModelId::Model1, ModelId::Model2] {
            let p = grid_posterior(model, &d, &PriorSpec::default(), &spec).unwrap();
            assert!(p.convergence_delta.unwrap() < CONVERGENCE_TOL);
        }
    }

    #[test]
    fn ordered_means_halves_support() {
        let d = sample_dataset(&MixtureParams::example_truth(), 6, 0.5, 8).unwrap();
        let prior = PriorSpec {
            ordered_means: true,
            ..test_prior()
        };
        let p = grid_posterior(ModelId::NoLabel, &d, &prior, &small_spec()).unwrap();
        let empty = Dataset::from_parts(vec![], vec![], vec![], None, 0).unwrap();
        let z = grid_posterior(ModelId::Model3, &empty, &prior, &small_spec()).unwrap();
        // prior still integrates to one up to the diagonal cells
        assert!(z.log_normalizer.abs() < 0.05, "{}", z.log_normalizer);
        let (m1, _) = p.moments(1);
        let (m2, _) = p.moments(2);
        assert!(m1 < m2);
    }

    #[test]
    fn invalid_spec_names_field() {
        let spec = GridSpec {
            b2: AxisSpec::new(1.0, -1.0, 41, 0.0),
            ..GridSpec::default()
        };
        match spec.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "grid.b2"),
            other => panic!("{other:?}"),
        }
        assert!(GridSpec::default().contains(&MixtureParams::example_truth()).unwrap());
    }
}
