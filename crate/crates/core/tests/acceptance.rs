//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; pass criterion numbers as arguments
//! to run a subset (`cargo test --test acceptance -- 3 5`).

use std::process::ExitCode;
use std::time::Instant;

use latent_ssl::asymptotics::{
    check_ordering, coeff_model1, coeff_model2, coeff_model2_eigen, coeff_model3, coeff_model3_eigen, coeff_nolabel,
    coeff_nolabel_eigen, nolabel_gap, OrderingVerdict,
};
use latent_ssl::data::sample_dataset;
use latent_ssl::fisher::check_conditions;
use latent_ssl::harness::experiment::{estimate_errors, table1, ErrorEstimate, ErrorSetup};
use latent_ssl::harness::{free_energy_kl, ExperimentConfig, Method, Preset};
use latent_ssl::inference::mcmc::ks_distance;
use latent_ssl::inference::{
    grid_posterior, kl_error_exact, kl_error_mc, log_evidence_table, mcmc_posterior, GridSpec, LatentPredictor,
    McmcConfig,
};
use latent_ssl::linalg::Matrix;
use latent_ssl::model::reduce_params;
use latent_ssl::{CoefficientReport, FisherSet, MixtureParams, ModelId, Result};

const ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn truth() -> MixtureParams {
    MixtureParams::example_truth()
}

fn fisher() -> Result<FisherSet> {
    FisherSet::compute_default(&truth())
}

fn c1_mapping() -> Result<Verdict> {
    let r = reduce_params(&truth())?;
    verdict(r.c1 == 1.5 && r.c2 == -1.125, format!("w̄* = ({}, {})", r.c1, r.c2))
}

fn c2_fisher() -> Result<Verdict> {
    let fs = fisher()?;
    let rep = check_conditions(&fs, f64::INFINITY);
    let sym = [&fs.i_y_given_x, &fs.i_xy, &fs.i_x]
        .iter()
        .map(|m| m.max_asymmetry())
        .fold(0.0, f64::max);
    let mins = [
        rep.i_y_given_x.min_eigenvalue,
        rep.i_xy.min_eigenvalue,
        rep.i_x.min_eigenvalue,
    ];
    let psd = fs.i_cond.min_eigenvalue() > -1e-10;
    let null = rep.sigma_eigs.iter().filter(|s| s.abs() < 1e-6).count();
    let pass = sym == 0.0
        && mins.iter().all(|&m| m > 0.0)
        && psd
        && null == 1
        && rep.sigma_eigs.len() == 3
        && fs.richardson_delta < 1e-8;
    verdict(
        pass,
        format!(
            "min eig (y|x, xy, x) = {mins:.4?}; σ = {:.6?}; near-zero σ: {null}; Richardson {:.1e}",
            rep.sigma_eigs, fs.richardson_delta
        ),
    )
}

fn c3_identities() -> Result<Verdict> {
    let fs = fisher()?;
    let mut worst: f64 = 0.0;
    for a in ALPHAS {
        let rep = CoefficientReport::compute(&fs, a)?;
        worst = worst
            .max((coeff_model2(&fs, a)? - coeff_model2_eigen(&rep.sigma_eigs, a)?).abs())
            .max((coeff_model3(&fs, a)? - coeff_model3_eigen(&rep.sigma_eigs, a)?).abs())
            .max((coeff_nolabel(&fs, a)? - coeff_nolabel_eigen(&rep.lambda_eigs, a)?).abs());
    }
    let c1 = coeff_model1(2, 0.5)?;
    let d1 = (c1 - 2.0 * std::f64::consts::LN_2).abs();
    verdict(
        worst <= 1e-10 && d1 <= 1e-12,
        format!("max |det - eigen| = {worst:.2e}; |c1 - 2 ln 2| = {d1:.1e}"),
    )
}

fn c4_ordering() -> Result<Verdict> {
    let fs = fisher()?;
    let mut min_gap = f64::INFINITY;
    let mut all = true;
    for a in ALPHAS {
        let ord = check_ordering(&CoefficientReport::compute(&fs, a)?);
        all &= ord.verdict == OrderingVerdict::Holds && ord.gap_32 > 0.0 && ord.gap_21 > 0.0;
        min_gap = min_gap.min(ord.gap_32).min(ord.gap_21);
    }
    verdict(all, format!("c3 < c2 < c1 at all 9 alphas, smallest gap {min_gap:.4}"))
}

fn c5_gap() -> Result<Verdict> {
    let fs = fisher()?;
    let mut worst: f64 = 0.0;
    let mut min_diff = f64::INFINITY;
    for a in ALPHAS {
        let rep = CoefficientReport::compute(&fs, a)?;
        let diff = rep.c_nl - rep.c3;
        worst = worst.max((diff - nolabel_gap(&rep.lambda_eigs, a)?).abs());
        min_diff = min_diff.min(diff);
    }
    // I_xy = I_x makes every λ one
    let flat = FisherSet {
        i_xy: fs.i_x.clone(),
        i_cond: Matrix::zeros(3),
        ..fs.clone()
    };
    let mut flat_worst: f64 = 0.0;
    for a in ALPHAS {
        flat_worst = flat_worst
            .max(nolabel_gap(&[1.0, 1.0, 1.0], a)?.abs())
            .max((coeff_nolabel(&flat, a)? - coeff_model3(&flat, a)?).abs());
    }
    verdict(
        worst <= 1e-10 && min_diff > 0.0 && flat_worst <= 1e-10,
        format!("max |diff - closed form| = {worst:.1e}; min diff {min_diff:.4}; λ = 1 residual {flat_worst:.1e}"),
    )
}

fn c6_estimators() -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Preset::ErrorCurve);
    let grid = GridSpec {
        prune_nats: None,
        ..cfg.grid.clone()
    };
    let mcmc = McmcConfig::with_retained(2000, 2000, 2);
    let t = truth();
    let (mut sum_grid, mut sum_mc, mut eq12): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut outside = Vec::new();
    for d in 0..20u64 {
        let seed = 0xACCE_0600 ^ d;
        let data = sample_dataset(&t, 8, 0.5, seed)?;
        for model in ModelId::ALL {
            let (obs, full) = log_evidence_table(model, &data, &cfg.prior, &grid)?;
            let eq1: Vec<f64> = full.iter().map(|f| f - obs).collect();
            sum_grid = sum_grid.max((eq1.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs());
            let post = grid_posterior(model, &data, &cfg.prior, &grid)?;
            let pred = LatentPredictor::from_grid(&post, data.x2(), None)?;
            let eq2 = pred.log_predict_all()?;
            eq12 = eq1.iter().zip(&eq2).map(|(a, b)| (a - b).abs()).fold(eq12, f64::max);

            let chain = mcmc_posterior(model, &data, &cfg.prior, &mcmc, 1.0, seed)?;
            let mc = LatentPredictor::from_chain(&chain, data.x2())?.log_predict_all()?;
            sum_mc = sum_mc.max((mc.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs());

            let exact = kl_error_exact(&data, &t, &pred)?;
            let est = kl_error_mc(&data, &t, &pred, 2000, seed)?;
            if (est.mean - exact).abs() > 3.0 * est.std_error {
                outside.push(format!("{model}/d{d}"));
            }
        }
    }
    verdict(
        sum_grid <= 1e-10 && sum_mc <= 1e-12 && eq12 <= 1e-8 && outside.is_empty(),
        format!(
            "(a) |Σp - 1| grid {sum_grid:.1e}, MC {sum_mc:.1e}; (b) max |eq1 - eq2| {eq12:.1e}; \
             (c) MC outside 3 SE: {}/80 {outside:?}",
            outside.len()
        ),
    )
}

fn c7_mcmc() -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Preset::ErrorCurve);
    let grid = GridSpec::default();
    let mcmc = McmcConfig::with_retained(10_000, 5000, 10);
    let t = truth();
    let mut worst = (0.0, String::new());
    let mut flagged = 0;
    for d in 0..3u64 {
        let seed = 0xACCE_0700 ^ d;
        let data = sample_dataset(&t, 8, 0.5, seed)?;
        for model in ModelId::ALL {
            let post = grid_posterior(model, &data, &cfg.prior, &grid)?;
            let chain = mcmc_posterior(model, &data, &cfg.prior, &mcmc, 1.0, seed)?;
            flagged += usize::from(chain.flagged);
            for axis in 0..chain.dim() {
                let ks = ks_distance(&chain.column(axis), &post.marginal(axis))?;
                if ks > worst.0 {
                    worst = (ks, format!("{model}/d{d}/{}", post.axes()[axis].name));
                }
            }
        }
    }
    let setup = ErrorSetup {
        method: Method::Mcmc,
        diagnostic_truth: true,
        ..ErrorSetup::from_config(&cfg)
    };
    let diag = estimate_errors(&ModelId::ALL, 8, 100, 0xACCE_0701, &setup)?;
    let diag_ok = diag.iter().all(|e| e.mean.abs() <= 3.0 * e.std_error);
    verdict(
        worst.0 < 0.05 && flagged == 0 && diag_ok,
        format!(
            "max KS {:.4} ({}); flagged chains {flagged}; truth-predictor KL {:?}",
            worst.0,
            worst.1,
            diag.iter().map(|e| e.mean).collect::<Vec<_>>()
        ),
    )
}

fn c8_free_energy() -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Preset::ErrorCurve);
    let grid = GridSpec {
        prune_nats: None,
        ..cfg.grid.clone()
    };
    let t = truth();
    let mut worst = [0.0f64; 3];
    for d in 0..10u64 {
        let data = sample_dataset(&t, 8, 0.5, 0xACCE_0800 ^ d)?;
        for (k, model) in [ModelId::Model1, ModelId::Model3, ModelId::Model2]
            .into_iter()
            .enumerate()
        {
            let fe = free_energy_kl(model, &data, &t, &cfg.prior, &grid)?;
            let post = grid_posterior(model, &data, &cfg.prior, &grid)?;
            let pred = LatentPredictor::from_grid(&post, data.x2(), None)?;
            let kl = kl_error_exact(&data, &t, &pred)? * data.n_unlabeled() as f64;
            worst[k] = worst[k].max((fe - kl).abs());
        }
    }
    verdict(
        worst[0] <= 1e-8 && worst[1] <= 1e-8,
        format!(
            "max residual: model1 (y|x) {:.1e}, model3 (xy vs xy&x) {:.1e}; model2 (y|x&xy vs y|x&x) {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn c9_table1() -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Preset::Fig3);
    let (rows, _, excl) = table1(&cfg)?;
    let se = |m: ModelId| {
        rows.iter()
            .find(|r| r.model == m)
            .map(|r| r.sq_error)
            .unwrap_or(f64::NAN)
    };
    let (e1, e2, e3) = (se(ModelId::Model1), se(ModelId::Model2), se(ModelId::Model3));
    let pass = e1 > e2
        && e2 > e3
        && (0.06..=0.24).contains(&e1)
        && (0.03..=0.12).contains(&e2)
        && (0.025..=0.10).contains(&e3);
    verdict(
        pass,
        format!(
            "E|μ̄ - w̄*|²: model1 {e1:.5}, model2 {e2:.5}, model3 {e3:.5} over {} datasets ({} excluded)",
            cfg.replications,
            excl.len()
        ),
    )
}

fn c10_trend() -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Preset::ErrorCurve);
    let setup = ErrorSetup::from_config(&cfg);
    let report = CoefficientReport::compute(&fisher()?, cfg.alpha)?;
    let ns = [8usize, 12, 16, 20];
    let mut curves: Vec<Vec<ErrorEstimate>> = Vec::new();
    for &n in &ns {
        curves.push(estimate_errors(&ModelId::ALL, n, cfg.replications, cfg.seed, &setup)?);
    }
    let by = |k: usize, m: ModelId| curves[k].iter().find(|e| e.model == m).expect("model present");
    let mut failures = Vec::new();
    let mut lines = Vec::new();

    // (i) D3 <= D2 <= D1 within 2 SE of the paired difference
    for (k, &n) in ns.iter().enumerate() {
        for (lo, hi) in [(ModelId::Model3, ModelId::Model2), (ModelId::Model2, ModelId::Model1)] {
            let (d, se) = by(k, lo).paired_difference(by(k, hi));
            if d > 2.0 * se {
                failures.push(format!("n={n}: D({lo}) - D({hi}) = {d:.4} > 2 SE ({se:.4})"));
            }
        }
    }
    // (ii) ratio n D / c near 1 at n = 20 and approaching 1
    let ratio = |k: usize, m: ModelId| -> Vec<Option<f64>> {
        let scale = ns[k] as f64 / report.coefficient(m);
        by(k, m).per_replication.iter().map(|v| v.map(|v| v * scale)).collect()
    };
    let mean = |v: &[Option<f64>]| {
        let kept: Vec<f64> = v.iter().flatten().copied().collect();
        kept.iter().sum::<f64>() / kept.len() as f64
    };
    for m in ModelId::ALL {
        let rs: Vec<f64> = (0..ns.len()).map(|k| mean(&ratio(k, m))).collect();
        let ses: Vec<f64> = (0..ns.len())
            .map(|k| by(k, m).std_error * ns[k] as f64 / report.coefficient(m))
            .collect();
        lines.push(format!(
            "{m}: nD/c = {}",
            rs.iter()
                .zip(&ses)
                .map(|(r, s)| format!("{r:.3}±{s:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        if m == ModelId::NoLabel {
            continue;
        }
        let last = rs[ns.len() - 1];
        if !(0.5..=2.0).contains(&last) {
            failures.push(format!("{m}: nD/c = {last:.3} at n=20 is outside [0.5, 2]"));
        }
        for k in 0..ns.len() - 1 {
            let (a, b) = (ratio(k, m), ratio(k + 1, m));
            let diffs: Vec<f64> = a.iter().zip(&b).filter_map(|(x, y)| Some((*y)? - (*x)?)).collect();
            let md = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let sd = (diffs.iter().map(|d| (d - md).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
            let se = sd / (diffs.len() as f64).sqrt();
            let step_away = (rs[k + 1] - 1.0).abs() - (rs[k] - 1.0).abs();
            if step_away > 2.0 * se {
                failures.push(format!(
                    "{m}: n={}→{} moves away from 1 by {step_away:.3} > 2 SE ({se:.3})",
                    ns[k],
                    ns[k + 1]
                ));
            }
        }
    }
    for l in &lines {
        println!("    {l}");
    }
    for f in &failures {
        println!("    violation: {f}");
    }
    verdict(
        failures.is_empty(),
        format!("{} replications per n; {} violations", cfg.replications, failures.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Result<Verdict>);

const CRITERIA: [Criterion; 10] = [
    (1, "reduced-parameter mapping", c1_mapping),
    (2, "Fisher validity at the truth", c2_fisher),
    (3, "coefficient identities", c3_identities),
    (4, "coefficient ordering", c4_ordering),
    (5, "no-label gap closed form", c5_gap),
    (6, "estimator correctness", c6_estimators),
    (7, "MCMC against the grid", c7_mcmc),
    (8, "free-energy identities", c8_free_energy),
    (9, "posterior-mean convergence table", c9_table1),
    (10, "asymptotic trend", c10_trend),
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (id, name, _) in CRITERIA {
            println!("criterion_{id}: test  # {name}");
        }
        return ExitCode::SUCCESS;
    }
    let positional: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<u32> = positional.iter().filter_map(|a| a.parse().ok()).collect();
    if !positional.is_empty() && selected.is_empty() {
        // a name filter meant for other test targets
        println!("acceptance: skipped (filter {positional:?})");
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = run().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        failed += usize::from(!v.pass);
        println!(
            "[{}] criterion {id:>2} {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
