use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method, Stage, MAX_EXCLUDED_SHARE};
use crate::asymptotics::{check_ordering, CoefficientReport, OrderingVerdict};
use crate::data::{sample_dataset, Dataset};
use crate::error::{Error, Result};
use crate::fisher::{default_quadrature, FisherSet};
use crate::inference::{
    convergence_stats, grid_posterior, kl_error_exact, kl_error_mc, mcmc_posterior, posterior_mean_reduced, GridSpec,
    LatentPredictor, McmcConfig, SampleChain, MAX_ENUMERATION,
};
use crate::model::{MixtureParams, ModelId, PriorSpec, ReducedParams};
use crate::numeric::RunningStats;
use crate::rng::replication_seed;

/// Everything besides the model, `n` and the replication count that the
/// error estimate depends on.
#[derive(Debug, Clone)]
pub struct ErrorSetup {
    pub truth: MixtureParams,
    pub alpha: f64,
    pub method: Method,
    pub prior: PriorSpec,
    pub grid: GridSpec,
    pub mcmc: McmcConfig,
    pub kl_draws: usize,
    /// Replace the posterior predictor by the true classifier.
    pub diagnostic_truth: bool,
}

impl ErrorSetup {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        ErrorSetup {
            truth: cfg.truth.clone(),
            alpha: cfg.alpha,
            method: cfg.method,
            prior: cfg.prior.clone(),
            grid: cfg.grid.clone(),
            mcmc: cfg.mcmc.clone(),
            kl_draws: cfg.kl_draws,
            diagnostic_truth: false,
        }
    }
}

/// A replication left out of an average, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub model: ModelId,
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub model: ModelId,
    pub n: usize,
    /// Mean per-latent-variable KL error over the kept replications.
    pub mean: f64,
    pub std_error: f64,
    pub replications: usize,
    pub exclusions: Vec<Exclusion>,
    /// Error of every replication in order; `None` where it was excluded.
    pub per_replication: Vec<Option<f64>>,
}

impl ErrorEstimate {
    /// Mean and standard error of `self - other` over the replications both
    /// kept, pairing identical datasets.
    pub fn paired_difference(&self, other: &ErrorEstimate) -> (f64, f64) {
        let stats: RunningStats = self
            .per_replication
            .iter()
            .zip(&other.per_replication)
            .filter_map(|(a, b)| Some((*a)? - (*b)?))
            .collect();
        (stats.mean(), stats.std_error())
    }
}

/// Failures that disqualify one replication rather than the experiment.
fn excludable(e: &Error) -> bool {
    matches!(
        e,
        Error::BoundaryLeak { .. } | Error::NonConvergence { .. } | Error::PoorMixing { .. }
    )
}

fn dataset_error(model: ModelId, data: &Dataset, setup: &ErrorSetup, seed: u64) -> Result<f64> {
    let x2 = data.x2();
    let predictor = if setup.diagnostic_truth {
        LatentPredictor::truth(&setup.truth, x2)?
    } else {
        match setup.method {
            Method::Grid => {
                let post = grid_posterior(model, data, &setup.prior, &setup.grid)?;
                LatentPredictor::from_grid(&post, x2, setup.grid.prune_nats)?
            }
            Method::Mcmc => {
                let chain = mcmc_posterior(model, data, &setup.prior, &setup.mcmc, setup.truth.sigma(), seed)?;
                if chain.flagged {
                    return Err(Error::PoorMixing {
                        acceptance_rate: chain.acceptance_rate,
                    });
                }
                LatentPredictor::from_chain(&chain, x2)?
            }
        }
    };
    if data.n_unlabeled() <= MAX_ENUMERATION {
        kl_error_exact(data, &setup.truth, &predictor)
    } else {
        Ok(kl_error_mc(data, &setup.truth, &predictor, setup.kl_draws, seed)?.mean)
    }
}

/// KL error of several models over `replications` datasets. Every model sees
/// the same dataset in a given replication; replication `r` uses the seed
/// token `seed ^ r`.
pub fn estimate_errors(
    models: &[ModelId],
    n: usize,
    replications: usize,
    seed: u64,
    setup: &ErrorSetup,
) -> Result<Vec<ErrorEstimate>> {
    if replications == 0 {
        return Err(Error::precondition("need at least one replication"));
    }
    let per_rep: Vec<Result<Vec<Result<f64>>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let token = replication_seed(seed, r as u64);
            let data = sample_dataset(&setup.truth, n, setup.alpha, token)?;
            Ok(models.iter().map(|&m| dataset_error(m, &data, setup, token)).collect())
        })
        .collect();
    let mut out: Vec<(RunningStats, Vec<Exclusion>, Vec<Option<f64>>)> =
        models.iter().map(|_| Default::default()).collect();
    for (r, rep) in per_rep.into_iter().enumerate() {
        for (k, res) in rep?.into_iter().enumerate() {
            out[k].2.push(res.as_ref().ok().copied());
            match res {
                Ok(v) => out[k].0.push(v),
                Err(e) if excludable(&e) => out[k].1.push(Exclusion {
                    model: models[k],
                    n,
                    replication: r,
                    seed: replication_seed(seed, r as u64),
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    models
        .iter()
        .zip(out)
        .map(|(&model, (stats, exclusions, per_replication))| {
            check_exclusions(exclusions.len(), replications)?;
            Ok(ErrorEstimate {
                model,
                n,
                mean: stats.mean(),
                std_error: stats.std_error(),
                replications: stats.count(),
                exclusions,
                per_replication,
            })
        })
        .collect()
}

pub fn estimate_error(
    model: ModelId,
    n: usize,
    replications: usize,
    seed: u64,
    setup: &ErrorSetup,
) -> Result<ErrorEstimate> {
    Ok(estimate_errors(&[model], n, replications, seed, setup)?.remove(0))
}

fn check_exclusions(excluded: usize, total: usize) -> Result<()> {
    if excluded as f64 > MAX_EXCLUDED_SHARE * total as f64 {
        return Err(Error::TooManyExclusions {
            excluded,
            total,
            limit: 100.0 * MAX_EXCLUDED_SHARE,
        });
    }
    Ok(())
}

/// One row of `error_curve.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveRow {
    pub model: ModelId,
    pub n: usize,
    pub alpha: f64,
    pub mean_kl: f64,
    pub std_error: f64,
    pub replications: usize,
    pub excluded: usize,
    /// Dominant-term coefficient copied from the coefficient report.
    pub coefficient: f64,
    /// `coefficient / n`.
    pub predicted: f64,
}

pub fn error_curve(cfg: &ExperimentConfig, report: &CoefficientReport) -> Result<(Vec<ErrorCurveRow>, Vec<Exclusion>)> {
    let setup = ErrorSetup::from_config(cfg);
    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    for &n in &cfg.n_values {
        for est in estimate_errors(&cfg.models, n, cfg.replications, cfg.seed, &setup)? {
            let c = report.coefficient(est.model);
            if est.mean < -3.0 * est.std_error - 1e-12 {
                return Err(Error::domain(format!(
                    "{} at n={n}: mean error {} below -3 SE",
                    est.model, est.mean
                )));
            }
            rows.push(ErrorCurveRow {
                model: est.model,
                n,
                alpha: cfg.alpha,
                mean_kl: est.mean,
                std_error: est.std_error,
                replications: est.replications,
                excluded: est.exclusions.len(),
                coefficient: c,
                predicted: c / n as f64,
            });
            exclusions.extend(est.exclusions);
        }
    }
    Ok((rows, exclusions))
}

/// One row of `table1.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub model: ModelId,
    pub n: usize,
    pub replications: usize,
    pub mean_c1: f64,
    pub mean_c2: f64,
    /// `E|μ̄ - w̄*|²`, summed over both coordinates.
    pub sq_error: f64,
    pub sq_error_c1: f64,
    pub sq_error_c2: f64,
    pub excluded: usize,
}

/// Posterior means in reduced coordinates for every model and replication,
/// plus the chains of replication 0.
pub fn table1(cfg: &ExperimentConfig) -> Result<(Vec<Table1Row>, Vec<SampleChain>, Vec<Exclusion>)> {
    let n = cfg.n_values[0];
    let truth_bar = crate::model::reduce_params(&cfg.truth)?;
    let per_rep: Vec<Result<Vec<Result<SampleChain>>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let token = replication_seed(cfg.seed, r as u64);
            let data = sample_dataset(&cfg.truth, n, cfg.alpha, token)?;
            Ok(cfg
                .models
                .iter()
                .map(|&m| {
                    let ch = mcmc_posterior(m, &data, &cfg.prior, &cfg.mcmc, cfg.truth.sigma(), token)?;
                    if ch.flagged {
                        return Err(Error::PoorMixing {
                            acceptance_rate: ch.acceptance_rate,
                        });
                    }
                    Ok(ch)
                })
                .collect())
        })
        .collect();
    let mut means: Vec<Vec<[f64; 2]>> = vec![Vec::new(); cfg.models.len()];
    let mut excl: Vec<Vec<Exclusion>> = vec![Vec::new(); cfg.models.len()];
    let mut first = Vec::new();
    for (r, rep) in per_rep.into_iter().enumerate() {
        for (k, res) in rep?.into_iter().enumerate() {
            let reduced = res.and_then(|ch| {
                let m = posterior_mean_reduced(&ch)?;
                if r == 0 {
                    first.push(ch);
                }
                Ok(m)
            });
            match reduced {
                Ok(m) => means[k].push([m.c1, m.c2]),
                Err(e) if excludable(&e) || matches!(e, Error::Domain(_)) => excl[k].push(Exclusion {
                    model: cfg.models[k],
                    n,
                    replication: r,
                    seed: replication_seed(cfg.seed, r as u64),
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    let mut rows = Vec::new();
    for (k, &model) in cfg.models.iter().enumerate() {
        check_exclusions(excl[k].len(), cfg.replications)?;
        let st = convergence_stats(&means[k], &truth_bar)?;
        rows.push(Table1Row {
            model,
            n,
            replications: st.replications,
            mean_c1: st.mean[0],
            mean_c2: st.mean[1],
            sq_error: st.mean_sq_error,
            sq_error_c1: st.per_coordinate_sq_error[0],
            sq_error_c2: st.per_coordinate_sq_error[1],
            excluded: excl[k].len(),
        });
    }
    Ok((rows, first, excl.concat()))
}

/// One row of `theorem_check.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_nl: f64,
    pub gap_32: f64,
    pub gap_21: f64,
    pub verdict: OrderingVerdict,
}

pub fn theorem_check(fs: &FisherSet, alphas: &[f64]) -> Result<Vec<TheoremRow>> {
    alphas
        .iter()
        .map(|&a| {
            let rep = CoefficientReport::compute(fs, a)?;
            let ord = check_ordering(&rep);
            Ok(TheoremRow {
                alpha: a,
                c1: rep.c1,
                c2: rep.c2,
                c3: rep.c3,
                c_nl: rep.c_nl,
                gap_32: ord.gap_32,
                gap_21: ord.gap_21,
                verdict: ord.verdict,
            })
        })
        .collect()
}

pub fn fisher_for(cfg: &ExperimentConfig) -> Result<FisherSet> {
    let quad = match &cfg.quadrature {
        Some(q) => *q,
        None => default_quadrature(&cfg.truth)?,
    };
    FisherSet::compute(&cfg.truth, &quad)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub master_seed: u64,
    /// Seed token of every replication, in order.
    pub replication_seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub exclusions: Vec<Exclusion>,
    pub flagged_chains: usize,
    /// Volatile fields; everything else is reproducible.
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
}

/// What [`run_experiment`] wrote.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub report: CoefficientReport,
    pub error_curve: Vec<ErrorCurveRow>,
    pub table1: Vec<Table1Row>,
    pub theorem: Vec<TheoremRow>,
    pub manifest: Manifest,
}

fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs every stage of `cfg` and writes the result bundle into its output
/// directory. Validation and the writability check happen before any compute.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    prepare_output_dir(&dir)?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut outputs = Vec::new();
    let mut exclusions = Vec::new();

    let fs = fisher_for(cfg)?;
    let report = CoefficientReport::compute(&fs, cfg.alpha)?;
    write_text(&dir.join("coefficients.json"), &report.to_json()?)?;
    outputs.push("coefficients.json".to_string());

    let mut theorem = Vec::new();
    if cfg.stages.contains(&Stage::TheoremCheck) {
        theorem = theorem_check(&fs, &cfg.alpha_sweep)?;
        write_rows(&dir.join("theorem_check.csv"), &theorem)?;
        outputs.push("theorem_check.csv".into());
    }

    let mut curve = Vec::new();
    if cfg.stages.contains(&Stage::ErrorCurve) {
        let (rows, ex) = error_curve(cfg, &report)?;
        write_rows(&dir.join("error_curve.csv"), &rows)?;
        outputs.push("error_curve.csv".into());
        curve = rows;
        exclusions.extend(ex);
    }

    let mut t1 = Vec::new();
    let mut flagged_chains = 0;
    if cfg.stages.contains(&Stage::Table1) || cfg.stages.contains(&Stage::Posterior) {
        let (rows, chains, ex) = table1(cfg)?;
        flagged_chains = ex.iter().filter(|e| e.reason.contains("acceptance")).count();
        if cfg.stages.contains(&Stage::Posterior) {
            for ch in &chains {
                let name = format!("posterior_samples_{}.csv", ch.model);
                ch.write_csv(&dir.join(&name))?;
                outputs.push(name);
            }
        }
        if cfg.stages.contains(&Stage::Table1) {
            write_rows(&dir.join("table1.csv"), &rows)?;
            outputs.push("table1.csv".into());
        }
        t1 = rows;
        exclusions.extend(ex);
    }

    let uses_replications = cfg
        .stages
        .iter()
        .any(|s| matches!(s, Stage::ErrorCurve | Stage::Table1 | Stage::Posterior));
    let replication_seeds = if uses_replications {
        (0..cfg.replications as u64)
            .map(|r| replication_seed(cfg.seed, r))
            .collect()
    } else {
        Vec::new()
    };
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        config_sha256: cfg.content_hash()?,
        master_seed: cfg.seed,
        replication_seeds,
        outputs,
        exclusions,
        flagged_chains,
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_text(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunSummary {
        output_dir: dir,
        report,
        error_curve: curve,
        table1: t1,
        theorem,
        manifest,
    })
}

/// Reduced truth of a config, for callers comparing against table rows.
pub fn reduced_truth(cfg: &ExperimentConfig) -> Result<ReducedParams> {
    crate::model::reduce_params(&cfg.truth)
}
