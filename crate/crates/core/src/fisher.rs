//! Score functions and Fisher information matrices for the two-component
//! scalar mixture, by deterministic quadrature over `x`.
//!
//! Parameter order is `(a1, b1, b2)` for the full model and `(c1, c2)` for
//! the reduced classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigenvalues, relative_rank, Matrix};
use crate::model::{reduce_params, MixtureParams, Params, ReducedParams};
use crate::numeric::{log_normal_1d, sigmoid};
use crate::quadrature::QuadratureSpec;

/// Change in any entry allowed when the node count is doubled.
pub const RICHARDSON_TOL: f64 = 1e-8;
/// Asymmetry tolerated before a quadrature matrix is symmetrised.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Relative eigenvalue threshold used when counting rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

fn interior_triple(w: &MixtureParams) -> Result<[f64; 3]> {
    let t = w.as_triple()?;
    if !(t[0] > 0.0 && t[0] < 1.0) {
        return Err(Error::domain(format!("score needs 0 < a1 < 1, got a1 = {}", t[0])));
    }
    Ok(t)
}

fn joint_scores(x: f64, a1: f64, b1: f64, b2: f64, s2: f64) -> [[f64; 3]; 2] {
    [[1.0 / a1, (x - b1) / s2, 0.0], [-1.0 / (1.0 - a1), 0.0, (x - b2) / s2]]
}

/// `p(y=1 | x, w)` for the scalar two-component mixture.
fn responsibility(x: f64, a1: f64, b1: f64, b2: f64, sigma: f64) -> f64 {
    let l1 = a1.ln() + log_normal_1d(x, b1, sigma);
    let l2 = (1.0 - a1).ln() + log_normal_1d(x, b2, sigma);
    sigmoid(l1 - l2)
}

/// `∂ ln p(x, y | w) / ∂(a1, b1, b2)`.
pub fn score_joint(x: f64, y: usize, w: &MixtureParams) -> Result<[f64; 3]> {
    let [a1, b1, b2] = interior_triple(w)?;
    let s = joint_scores(x, a1, b1, b2, w.sigma() * w.sigma());
    match y {
        1 | 2 => Ok(s[y - 1]),
        _ => Err(Error::domain(format!("label {y} outside 1..=2"))),
    }
}

/// `∂ ln p(x | w) / ∂(a1, b1, b2) = Σ_y p(y|x,w) ∂ ln p(x, y | w)`.
pub fn score_marginal(x: f64, w: &MixtureParams) -> Result<[f64; 3]> {
    let [a1, b1, b2] = interior_triple(w)?;
    let s = joint_scores(x, a1, b1, b2, w.sigma() * w.sigma());
    let r = responsibility(x, a1, b1, b2, w.sigma());
    Ok(std::array::from_fn(|i| r * s[0][i] + (1.0 - r) * s[1][i]))
}

/// `∂ ln p(y | x, ·)` in full coordinates `(a1, b1, b2)` or reduced `(c1, c2)`.
pub fn score_classifier(x: f64, y: usize, params: &Params) -> Result<Vec<f64>> {
    match params {
        Params::Full(w) => {
            let j = score_joint(x, y, w)?;
            let m = score_marginal(x, w)?;
            Ok(j.iter().zip(&m).map(|(a, b)| a - b).collect())
        }
        Params::Reduced(wbar) => {
            let p1 = sigmoid(-(wbar.c1 * x + wbar.c2));
            let dz = match y {
                1 => -(1.0 - p1),
                2 => p1,
                _ => return Err(Error::domain(format!("label {y} outside 1..=2"))),
            };
            Ok(vec![dz * x, dz])
        }
    }
}

fn check_coverage(quad: &QuadratureSpec, w: &MixtureParams) -> Result<()> {
    let [_, b1, b2] = w.as_triple()?;
    let reach = 8.0 * w.sigma();
    if quad.lower > b1.min(b2) - reach || quad.upper < b1.max(b2) + reach {
        return Err(Error::precondition(format!(
            "quadrature [{}, {}] must extend 8σ beyond the means {b1}, {b2}",
            quad.lower, quad.upper
        )));
    }
    Ok(())
}

/// Default rule: 512-node Gauss-Legendre over `[min b - 10σ, max b + 10σ]`.
pub fn default_quadrature(w: &MixtureParams) -> Result<QuadratureSpec> {
    let [_, b1, b2] = w.as_triple()?;
    let pad = 10.0 * w.sigma();
    QuadratureSpec::gauss_legendre(b1.min(b2) - pad, b1.max(b2) + pad, 512)
}

fn accumulate<const D: usize>(
    quad: &QuadratureSpec,
    mut integrand: impl FnMut(f64, &mut dyn FnMut([f64; D], f64)),
) -> Result<Matrix> {
    let mut acc = [[0.0; D]; D];
    for (x, wt) in quad.nodes() {
        integrand(x, &mut |s: [f64; D], mass: f64| {
            for i in 0..D {
                for j in 0..D {
                    acc[i][j] += wt * mass * s[i] * s[j];
                }
            }
        });
    }
    let m = Matrix::from_rows(&acc)?;
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric { asymmetry: asym });
    }
    Ok(m.symmetrized())
}

fn fisher_xy_raw(w: &MixtureParams, quad: &QuadratureSpec) -> Result<Matrix> {
    let [a1, b1, b2] = interior_triple(w)?;
    let sigma = w.sigma();
    accumulate::<3>(quad, |x, add| {
        let s = joint_scores(x, a1, b1, b2, sigma * sigma);
        add(s[0], (a1.ln() + log_normal_1d(x, b1, sigma)).exp());
        add(s[1], ((1.0 - a1).ln() + log_normal_1d(x, b2, sigma)).exp());
    })
}

fn fisher_x_raw(w: &MixtureParams, quad: &QuadratureSpec) -> Result<Matrix> {
    let [a1, b1, b2] = interior_triple(w)?;
    let sigma = w.sigma();
    accumulate::<3>(quad, |x, add| {
        let s = joint_scores(x, a1, b1, b2, sigma * sigma);
        let r = responsibility(x, a1, b1, b2, sigma);
        let sm = std::array::from_fn(|i| r * s[0][i] + (1.0 - r) * s[1][i]);
        let px = crate::model::log_marginal_scalar(x, a1, b1, b2, sigma).exp();
        add(sm, px);
    })
}

fn fisher_y_given_x_raw(wbar: &ReducedParams, truth: &MixtureParams, quad: &QuadratureSpec) -> Result<Matrix> {
    let [ta1, tb1, tb2] = truth.as_triple()?;
    let ts = truth.sigma();
    accumulate::<2>(quad, |x, add| {
        let qx = crate::model::log_marginal_scalar(x, ta1, tb1, tb2, ts).exp();
        let p1 = sigmoid(-(wbar.c1 * x + wbar.c2));
        // both labels give the outer product (x, 1)(x, 1)ᵀ scaled by p1 (1 - p1)
        add([x, 1.0], p1 * (1.0 - p1) * qx);
    })
}

/// `I(w)` evaluated directly from the classifier score in full coordinates,
/// weighting by `q(x)` of `truth`.
pub fn fisher_classifier_full(w: &MixtureParams, truth: &MixtureParams, quad: &QuadratureSpec) -> Result<Matrix> {
    let [a1, b1, b2] = interior_triple(w)?;
    let [ta1, tb1, tb2] = truth.as_triple()?;
    let sigma = w.sigma();
    accumulate::<3>(quad, |x, add| {
        let s = joint_scores(x, a1, b1, b2, sigma * sigma);
        let r = responsibility(x, a1, b1, b2, sigma);
        let qx = crate::model::log_marginal_scalar(x, ta1, tb1, tb2, truth.sigma()).exp();
        // score of ln p(y|x,w) for y=1 is (1-r)(s1 - s2), for y=2 it is -r(s1 - s2)
        let d: [f64; 3] = std::array::from_fn(|i| s[0][i] - s[1][i]);
        add(std::array::from_fn(|i| (1.0 - r) * d[i]), r * qx);
        add(std::array::from_fn(|i| -r * d[i]), (1.0 - r) * qx);
    })
}

/// A quadrature matrix and its node-doubling convergence delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEstimate {
    pub matrix: Matrix,
    /// Largest entry change when the node count is doubled.
    pub richardson_delta: f64,
}

fn with_richardson(
    what: &str,
    quad: &QuadratureSpec,
    f: impl Fn(&QuadratureSpec) -> Result<Matrix>,
) -> Result<QuadratureEstimate> {
    let coarse = f(quad)?;
    let fine = f(&quad.doubled())?;
    let mut worst = (0.0, 0.0, 0.0);
    for (c, v) in coarse.as_slice().iter().zip(fine.as_slice()) {
        let d = (c - v).abs();
        if d >= worst.0 {
            worst = (d, *c, *v);
        }
    }
    if worst.0 >= RICHARDSON_TOL {
        return Err(Error::NonConvergence {
            what: what.to_string(),
            coarse: worst.1,
            fine: worst.2,
            change: worst.0,
            tol: RICHARDSON_TOL,
        });
    }
    Ok(QuadratureEstimate {
        matrix: fine,
        richardson_delta: worst.0,
    })
}

/// `I_xy(w) = ∫ Σ_y s_xy s_xyᵀ p(x, y | w) dx`.
pub fn fisher_xy(w: &MixtureParams, quad: &QuadratureSpec) -> Result<QuadratureEstimate> {
    quad.validate()?;
    check_coverage(quad, w)?;
    with_richardson("I_xy", quad, |q| fisher_xy_raw(w, q))
}

/// `I_x(w) = ∫ s_x s_xᵀ p(x | w) dx`.
pub fn fisher_x(w: &MixtureParams, quad: &QuadratureSpec) -> Result<QuadratureEstimate> {
    quad.validate()?;
    check_coverage(quad, w)?;
    with_richardson("I_x", quad, |q| fisher_x_raw(w, q))
}

/// `I_{y|x}(w̄) = ∫ Σ_y s s ᵀ p(y | x, w̄) q(x) dx` with `q` the marginal of `truth`.
pub fn fisher_y_given_x(
    wbar: &ReducedParams,
    truth: &MixtureParams,
    quad: &QuadratureSpec,
) -> Result<QuadratureEstimate> {
    quad.validate()?;
    check_coverage(quad, truth)?;
    with_richardson("I_y|x", quad, |q| fisher_y_given_x_raw(wbar, truth, q))
}

/// The information matrices of the regularity conditions, all at the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherSet {
    pub i_y_given_x: Matrix,
    pub i_xy: Matrix,
    pub i_x: Matrix,
    /// `I(w*) = I_xy(w*) - I_x(w*)`.
    pub i_cond: Matrix,
    pub eval_point: MixtureParams,
    pub eval_point_reduced: ReducedParams,
    pub quad: QuadratureSpec,
    /// Largest node-doubling change over the three quadrature matrices.
    pub richardson_delta: f64,
}

impl FisherSet {
    /// Evaluates every matrix at `truth` (which must have `σ = 1` for the reduced block).
    pub fn compute(truth: &MixtureParams, quad: &QuadratureSpec) -> Result<FisherSet> {
        let wbar = reduce_params(truth)?;
        let i_xy = fisher_xy(truth, quad)?;
        let i_x = fisher_x(truth, quad)?;
        let i_yx = fisher_y_given_x(&wbar, truth, quad)?;
        let i_cond = &i_xy.matrix - &i_x.matrix;
        Ok(FisherSet {
            i_y_given_x: i_yx.matrix,
            i_cond,
            i_xy: i_xy.matrix,
            i_x: i_x.matrix,
            eval_point: truth.clone(),
            eval_point_reduced: wbar,
            quad: *quad,
            richardson_delta: i_xy
                .richardson_delta
                .max(i_x.richardson_delta)
                .max(i_yx.richardson_delta),
        })
    }

    pub fn compute_default(truth: &MixtureParams) -> Result<FisherSet> {
        FisherSet::compute(truth, &default_quadrature(truth)?)
    }

    pub fn dim_full(&self) -> usize {
        self.i_xy.dim()
    }

    pub fn dim_reduced(&self) -> usize {
        self.i_y_given_x.dim()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<FisherSet> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Jacobian `∂(c1, c2)/∂(a1, b1, b2)` of the reduction at `w` (σ = 1).
pub fn reduction_jacobian(w: &MixtureParams) -> Result<[[f64; 3]; 2]> {
    let [a1, b1, b2] = interior_triple(w)?;
    Ok([[0.0, -1.0, 1.0], [-1.0 / (a1 * (1.0 - a1)), b1, -b2]])
}

/// Verdict for one information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixCheck {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub pass: bool,
}

impl MatrixCheck {
    /// Positive definite with condition number at most `tol`; `tol = ∞` always passes.
    fn new(m: &Matrix, tol: f64) -> Self {
        let eig = m.symmetric_eigenvalues();
        let max = eig[0];
        let min = *eig.last().expect("non-empty");
        let pass = tol == f64::INFINITY || (min > 0.0 && max / min <= tol);
        MatrixCheck {
            min_eigenvalue: min,
            max_eigenvalue: max,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub tol: f64,
    pub i_y_given_x: MatrixCheck,
    pub i_xy: MatrixCheck,
    pub i_x: MatrixCheck,
    /// Generalized eigenvalues of `I(w*)` relative to `I_x(w*)`, descending.
    pub sigma_eigs: Vec<f64>,
    pub rank_i_cond: usize,
    pub rank_tol: f64,
    pub a1_pass: bool,
    pub a2_pass: bool,
    /// Which checks failed, by name.
    pub failures: Vec<String>,
}

/// Reports the positive-definiteness of the three information matrices
/// (pass = condition number ≤ `tol`) and the spectrum of `I(w*)`.
pub fn check_conditions(fs: &FisherSet, tol: f64) -> ConditionReport {
    let i_y_given_x = MatrixCheck::new(&fs.i_y_given_x, tol);
    let i_xy = MatrixCheck::new(&fs.i_xy, tol);
    let i_x = MatrixCheck::new(&fs.i_x, tol);
    let sigma_eigs = generalized_eigenvalues(&fs.i_cond, &fs.i_x).unwrap_or_else(|_| vec![f64::NAN; fs.dim_full()]);
    let rank = relative_rank(&sigma_eigs, DEFAULT_RANK_TOL);
    let mut failures = Vec::new();
    if !i_y_given_x.pass {
        failures.push("A1: I_y|x".to_string());
    }
    if !i_xy.pass {
        failures.push("A2: I_xy".to_string());
    }
    if !i_x.pass {
        failures.push("A2: I_x".to_string());
    }
    ConditionReport {
        tol,
        a1_pass: i_y_given_x.pass,
        a2_pass: i_xy.pass && i_x.pass,
        i_y_given_x,
        i_xy,
        i_x,
        sigma_eigs,
        rank_i_cond: rank,
        rank_tol: DEFAULT_RANK_TOL,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_classify, log_classify_reduced, log_joint, log_marginal_x};
    use proptest::prelude::*;

    fn wstar() -> MixtureParams {
        MixtureParams::example_truth()
    }

    /// Central differences of `f` at `(a1, b1, b2)`.
    fn fd3(f: impl Fn(f64, f64, f64) -> f64, p: [f64; 3]) -> [f64; 3] {
        let h = 1e-5;
        std::array::from_fn(|i| {
            let mut lo = p;
            let mut hi = p;
            lo[i] -= h;
            hi[i] += h;
            (f(hi[0], hi[1], hi[2]) - f(lo[0], lo[1], lo[2])) / (2.0 * h)
        })
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn score_examples() {
        let s = score_joint(1.5, 2, &wstar()).unwrap();
        assert_eq!(s[2], 0.0);
        let w = MixtureParams::two_component(0.3, -1.0, 2.0, 1.0).unwrap();
        for x in [-4.0, 0.0, 7.0] {
            assert!((score_joint(x, 1, &w).unwrap()[0] - 1.0 / 0.3).abs() < 1e-15);
        }
        let boundary = MixtureParams::two_component(1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(score_joint(0.0, 1, &boundary), Err(Error::Domain(_))));
    }

    #[test]
    fn reduced_score_at_decision_boundary() {
        let wbar = ReducedParams::new(2.0, -1.0).unwrap();
        let x = 0.5;
        let g = score_classifier(x, 1, &Params::Reduced(wbar)).unwrap();
        assert!((g[0] + x / 2.0).abs() < 1e-15 && (g[1] + 0.5).abs() < 1e-15);
        let f = |c1: f64, c2: f64| log_classify_reduced(x, 1, &ReducedParams { c1, c2 }).unwrap();
        let h = 1e-6;
        let d1 = (f(2.0 + h, -1.0) - f(2.0 - h, -1.0)) / (2.0 * h);
        let d2 = (f(2.0, -1.0 + h) - f(2.0, -1.0 - h)) / (2.0 * h);
        assert!((d1 - g[0]).abs() < 1e-8 && (d2 - g[1]).abs() < 1e-8);
    }

    #[test]
    fn fisher_xy_analytic_entry() {
        let fs = fisher_xy(&wstar(), &default_quadrature(&wstar()).unwrap()).unwrap();
        assert!((fs.matrix[(0, 0)] - 4.0).abs() < 1e-10);
        assert!((fs.matrix[(1, 1)] - 0.5).abs() < 1e-10);
        assert!(fs.richardson_delta < RICHARDSON_TOL);
    }

    #[test]
    fn conditional_information_equals_difference_and_congruence() {
        let fs = FisherSet::compute_default(&wstar()).unwrap();
        let direct = fisher_classifier_full(&wstar(), &wstar(), &fs.quad.doubled()).unwrap();
        assert!(direct.max_abs_diff(&fs.i_cond) < 1e-10);

        // I(w*) = Jᵀ I_y|x J
        let j = reduction_jacobian(&wstar()).unwrap();
        let mut cong = Matrix::zeros(3);
        for a in 0..3 {
            for b in 0..3 {
                let mut s = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        s += j[k][a] * fs.i_y_given_x[(k, l)] * j[l][b];
                    }
                }
                cong[(a, b)] = s;
            }
        }
        assert!(cong.max_abs_diff(&fs.i_cond) < 1e-10);
    }

    #[test]
    fn uninformative_classifier_information() {
        let truth = wstar();
        let q = default_quadrature(&truth).unwrap();
        let m = fisher_y_given_x(&ReducedParams::new(0.0, 0.0).unwrap(), &truth, &q)
            .unwrap()
            .matrix;
        // q(x) moments: E[1] = 1, E[x] = 0.75, E[x²] = 1 + (0 + 2.25)/2
        let ex = 0.75;
        let ex2 = 1.0 + 1.125;
        assert!((m[(0, 0)] - 0.25 * ex2).abs() < 1e-10);
        assert!((m[(0, 1)] - 0.25 * ex).abs() < 1e-10);
        assert!((m[(1, 1)] - 0.25).abs() < 1e-10);
        assert!(m.min_eigenvalue() > 0.0);
    }

    #[test]
    fn degenerate_means_are_flagged() {
        let w = MixtureParams::two_component(0.5, 0.7, 0.7, 1.0).unwrap();
        let q = default_quadrature(&w).unwrap();
        let i_xy = fisher_xy(&w, &q).unwrap().matrix;
        let i_x = fisher_x(&w, &q).unwrap().matrix;
        assert!(i_x.max_asymmetry() == 0.0 && i_x.min_eigenvalue() > -1e-12);
        let fs = FisherSet {
            i_y_given_x: Matrix::identity(2),
            i_cond: &i_xy - &i_x,
            i_xy,
            i_x,
            eval_point: w.clone(),
            eval_point_reduced: reduce_params(&w).unwrap(),
            quad: q,
            richardson_delta: 0.0,
        };
        let report = check_conditions(&fs, 1e8);
        assert!(!report.a2_pass);
        assert!(report.failures.iter().any(|f| f.starts_with("A2")));
        assert!(check_conditions(&fs, f64::INFINITY).a2_pass);
    }

    #[test]
    fn example_conditions_pass() {
        let fs = FisherSet::compute_default(&wstar()).unwrap();
        let report = check_conditions(&fs, 1e8);
        assert!(report.a1_pass && report.a2_pass, "{report:?}");
        assert_eq!(report.rank_i_cond, 2);
        assert!(report.sigma_eigs[2].abs() < 1e-6);
    }

    #[test]
    fn score_expectations_vanish() {
        let w = MixtureParams::two_component(0.35, -0.5, 1.2, 1.0).unwrap();
        let q = default_quadrature(&w).unwrap();
        let mut joint = [0.0; 3];
        let mut marg = [0.0; 3];
        for (x, wt) in q.nodes() {
            for y in 1..=2 {
                let p = log_joint(&[x], y, &w).unwrap().exp();
                let s = score_joint(x, y, &w).unwrap();
                for i in 0..3 {
                    joint[i] += wt * p * s[i];
                }
            }
            let p = log_marginal_x(&[x], &w).unwrap().exp();
            let s = score_marginal(x, &w).unwrap();
            for i in 0..3 {
                marg[i] += wt * p * s[i];
            }
        }
        assert!(joint.iter().chain(&marg).all(|v| v.abs() < 1e-8), "{joint:?} {marg:?}");
    }

    #[test]
    fn coverage_precondition() {
        let q = QuadratureSpec::gauss_legendre(-3.0, 3.0, 64).unwrap();
        assert!(matches!(fisher_xy(&wstar(), &q), Err(Error::Precondition(_))));
    }

    #[test]
    fn json_round_trip() {
        let fs = FisherSet::compute_default(&wstar()).unwrap();
        let back = FisherSet::from_json(&fs.to_json().unwrap()).unwrap();
        assert_eq!(back, fs);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn scores_match_finite_differences(x in -5.0..6.0f64, a1 in 0.1..0.9f64, b1 in -2.0..2.0f64, b2 in -2.0..3.0f64, y in 1usize..=2) {
            let w = MixtureParams::two_component(a1, b1, b2, 1.0).unwrap();
            let p = [a1, b1, b2];
            let tw = |a: f64, m1: f64, m2: f64| MixtureParams::two_component(a, m1, m2, 1.0).unwrap();

            let fj = fd3(|a, m1, m2| log_joint(&[x], y, &tw(a, m1, m2)).unwrap(), p);
            let fm = fd3(|a, m1, m2| log_marginal_x(&[x], &tw(a, m1, m2)).unwrap(), p);
            let fc = fd3(|a, m1, m2| log_classify(&[x], y, &tw(a, m1, m2)).unwrap(), p);
            let sj = score_joint(x, y, &w).unwrap();
            let sm = score_marginal(x, &w).unwrap();
            let sc = score_classifier(x, y, &Params::Full(w.clone())).unwrap();
            for i in 0..3 {
                prop_assert!(rel_close(sj[i], fj[i], 1e-6), "joint {i}: {} vs {}", sj[i], fj[i]);
                prop_assert!(rel_close(sm[i], fm[i], 1e-6), "marginal {i}: {} vs {}", sm[i], fm[i]);
                prop_assert!(rel_close(sc[i], fc[i], 1e-6), "classifier {i}: {} vs {}", sc[i], fc[i]);
                prop_assert!((sc[i] - (sj[i] - sm[i])).abs() < 1e-12 * (1.0 + sj[i].abs()));
            }

            let wbar = reduce_params(&w).unwrap();
            let g = score_classifier(x, y, &Params::Reduced(wbar)).unwrap();
            let h = 1e-5;
            let f = |c1: f64, c2: f64| log_classify_reduced(x, y, &ReducedParams { c1, c2 }).unwrap();
            let d1 = (f(wbar.c1 + h, wbar.c2) - f(wbar.c1 - h, wbar.c2)) / (2.0 * h);
            let d2 = (f(wbar.c1, wbar.c2 + h) - f(wbar.c1, wbar.c2 - h)) / (2.0 * h);
            prop_assert!(rel_close(g[0], d1, 1e-6) && rel_close(g[1], d2, 1e-6));
        }

        #[test]
        fn marginal_score_is_responsibility_weighted(x in -5.0..6.0f64, a1 in 0.05..0.95f64, b1 in -2.0..2.0f64, b2 in -2.0..3.0f64) {
            let w = MixtureParams::two_component(a1, b1, b2, 1.0).unwrap();
            let sm = score_marginal(x, &w).unwrap();
            let r1 = log_classify(&[x], 1, &w).unwrap().exp();
            let s1 = score_joint(x, 1, &w).unwrap();
            let s2 = score_joint(x, 2, &w).unwrap();
            for i in 0..3 {
                let expect = r1 * s1[i] + (1.0 - r1) * s2[i];
                prop_assert!((sm[i] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
            }
        }
    }
}
