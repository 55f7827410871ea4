use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use latent_ssl::data::sample_dataset;
use latent_ssl::fisher::check_conditions;
use latent_ssl::harness::experiment::fisher_for;
use latent_ssl::harness::{free_energy, run_experiment, ExperimentConfig, FreeEnergyKind, Preset, Stage};
use latent_ssl::{CoefficientReport, Error, Result};

#[derive(Parser)]
#[command(
    name = "latent-ssl",
    version,
    about = "Latent-label estimation experiments for semi-supervised Gaussian mixtures"
)]
struct Cli {
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config (JSON). Without it each command uses its preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fisher matrices at the truth and the regularity checks.
    Fisher {
        /// Largest accepted condition number; unlimited when omitted.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Dominant-term coefficients and eigenvalues.
    Coeffs {
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Posterior samples of one replication per model.
    Posterior,
    /// Replicated KL error for every model and n, with the c/n overlay.
    ErrorCurve,
    /// Posterior-mean convergence table.
    Table1,
    /// Free energy of one sampled dataset.
    FreeEnergy {
        /// One of y|x, xy, xy&x, y|x&xy, y|x&x.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Check a config file without running it.
    ValidateConfig { path: PathBuf },
    /// Run every stage listed in the config.
    Run,
    /// Print a preset config: fig3, theorem-check or error-curve.
    Preset { name: String },
}

fn load(cli: &Cli, default: Preset) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::preset(default),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run_stage(cli: &Cli, default: Preset, stage: Stage) -> Result<serde_json::Value> {
    let mut cfg = load(cli, default)?;
    cfg.stages = vec![stage];
    let s = run_experiment(&cfg)?;
    Ok(json!({
        "output_dir": s.output_dir,
        "outputs": s.manifest.outputs,
        "error_curve": s.error_curve,
        "table1": s.table1,
        "excluded": s.manifest.exclusions.len(),
    }))
}

fn execute(cli: &Cli) -> Result<serde_json::Value> {
    match &cli.command {
        Command::Fisher { tol } => {
            let cfg = load(cli, Preset::TheoremCheck)?;
            cfg.validate()?;
            let fs = fisher_for(&cfg)?;
            let report = check_conditions(&fs, tol.unwrap_or(f64::INFINITY));
            Ok(json!({ "fisher": fs, "conditions": report }))
        }
        Command::Coeffs { alpha } => {
            let cfg = load(cli, Preset::TheoremCheck)?;
            cfg.validate()?;
            let rep = CoefficientReport::compute(&fisher_for(&cfg)?, alpha.unwrap_or(cfg.alpha))?;
            Ok(serde_json::to_value(rep)?)
        }
        Command::Posterior => run_stage(cli, Preset::Fig3, Stage::Posterior),
        Command::ErrorCurve => run_stage(cli, Preset::ErrorCurve, Stage::ErrorCurve),
        Command::Table1 => run_stage(cli, Preset::Fig3, Stage::Table1),
        Command::FreeEnergy { kind, n } => {
            let cfg = load(cli, Preset::ErrorCurve)?;
            cfg.validate()?;
            let kind: FreeEnergyKind = kind.parse()?;
            let n = n.or(cfg.n_values.first().copied()).unwrap_or(8);
            let data = sample_dataset(&cfg.truth, n, cfg.alpha, cfg.seed).map_err(|e| Error::Config {
                field: "n".into(),
                reason: e.to_string(),
            })?;
            let value = free_energy(kind, &data, None, &cfg.truth, &cfg.prior, &cfg.grid)?;
            Ok(json!({ "kind": kind, "n": n, "seed": cfg.seed, "value": value }))
        }
        Command::ValidateConfig { path } => {
            let cfg = ExperimentConfig::load(path).map_err(|e| match e {
                Error::Json(j) => Error::Config {
                    field: "<document>".into(),
                    reason: j.to_string(),
                },
                other => other,
            })?;
            cfg.validate()?;
            Ok(json!({ "valid": true, "name": cfg.name, "config_sha256": cfg.content_hash()? }))
        }
        Command::Run => {
            let cfg = load(cli, Preset::TheoremCheck)?;
            let s = run_experiment(&cfg)?;
            Ok(json!({ "output_dir": s.output_dir, "outputs": s.manifest.outputs }))
        }
        Command::Preset { name } => Ok(serde_json::to_value(ExperimentConfig::preset(name.parse()?))?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable output"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut record = json!({ "error": e.kind(), "message": e.to_string() });
            if let Error::Config { field, .. } = &e {
                record["field"] = json!(field);
            }
            eprintln!("{record}");
            // invalid input is a usage error
            if matches!(e, Error::Config { .. }) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
