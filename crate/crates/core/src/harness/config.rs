use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::labeled_count;
use crate::error::{Error, Result};
use crate::inference::{GridSpec, McmcConfig};
use crate::model::{MixtureParams, ModelId, PriorSpec};
use crate::quadrature::QuadratureSpec;

/// How the posterior behind `p(Y2 | D)` is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    Mcmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// Ordering verdicts over `alpha_sweep`.
    TheoremCheck,
    ErrorCurve,
    /// Posterior samples of replication 0, one CSV per model.
    Posterior,
    Table1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub truth: MixtureParams,
    pub alpha: f64,
    #[serde(default)]
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub models: Vec<ModelId>,
    pub method: Method,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub mcmc: McmcConfig,
    /// Monte-Carlo draws of `Y2` when `2^|X2|` is too large to enumerate.
    #[serde(default = "default_kl_draws")]
    pub kl_draws: usize,
    #[serde(default)]
    pub alpha_sweep: Vec<f64>,
    /// Fisher quadrature; `None` picks a rule from the truth.
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub stages: Vec<Stage>,
}

fn default_kl_draws() -> usize {
    2000
}

/// Largest tolerated share of excluded replications.
pub const MAX_EXCLUDED_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig3,
    TheoremCheck,
    ErrorCurve,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig3, Preset::TheoremCheck, Preset::ErrorCurve];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::TheoremCheck => "theorem-check",
            Preset::ErrorCurve => "error-curve",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config("preset", format!("unknown preset `{s}`")))
    }
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        let base = ExperimentConfig {
            name: p.as_str().to_string(),
            truth: MixtureParams::example_truth(),
            alpha: 0.5,
            n_values: vec![],
            replications: 1,
            models: vec![],
            method: Method::Grid,
            prior: PriorSpec::default(),
            grid: GridSpec::default(),
            mcmc: McmcConfig::default(),
            kl_draws: default_kl_draws(),
            alpha_sweep: vec![],
            quadrature: None,
            seed: 20_240_601,
            output_dir: PathBuf::from(format!("out/{}", p.as_str())),
            stages: vec![],
        };
        match p {
            Preset::Fig3 => ExperimentConfig {
                n_values: vec![400],
                replications: 50,
                models: vec![ModelId::Model1, ModelId::Model2, ModelId::Model3],
                method: Method::Mcmc,
                mcmc: McmcConfig::with_retained(100, 5000, 50),
                stages: vec![Stage::Posterior, Stage::Table1],
                ..base
            },
            Preset::TheoremCheck => ExperimentConfig {
                alpha_sweep: (1..=9).map(|k| k as f64 / 10.0).collect(),
                stages: vec![Stage::TheoremCheck],
                ..base
            },
            Preset::ErrorCurve => ExperimentConfig {
                n_values: vec![8, 12, 16, 20],
                replications: 500,
                models: ModelId::ALL.to_vec(),
                // at n <= 20 the posterior is prior-dominated; a scale-3 prior
                // keeps the finite-n error near its 1/n asymptote
                prior: PriorSpec {
                    mean_scale: 3.0,
                    reduced_scale: 3.0,
                    ..PriorSpec::default()
                },
                grid: GridSpec {
                    prune_nats: Some(40.0),
                    ..GridSpec::compact()
                },
                stages: vec![Stage::ErrorCurve],
                ..base
            },
        }
    }

    /// Checks every field; the error names the first offending one.
    pub fn validate(&self) -> Result<()> {
        let [_, _, _] = self
            .truth
            .as_triple()
            .map_err(|e| Error::config("truth", e.to_string()))?;
        if self.truth.sigma() != 1.0 {
            return Err(Error::config("truth.sigma", "only sigma = 1 is supported"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", "must lie strictly inside (0, 1)"));
        }
        let needs_data = self
            .stages
            .iter()
            .any(|s| matches!(s, Stage::ErrorCurve | Stage::Posterior | Stage::Table1));
        if needs_data {
            if self.n_values.is_empty() {
                return Err(Error::config("n_values", "needs at least one sample size"));
            }
            if self.models.is_empty() {
                return Err(Error::config("models", "needs at least one model"));
            }
        }
        for (i, &n) in self.n_values.iter().enumerate() {
            if n == 0 {
                return Err(Error::config(format!("n_values[{i}]"), "must be positive"));
            }
            if labeled_count(n, self.alpha).is_err() {
                return Err(Error::config(
                    format!("n_values[{i}]"),
                    format!("alpha * n = {} is not an integer", self.alpha * n as f64),
                ));
            }
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(Error::config(format!("models[{i}]"), format!("{m} listed twice")));
            }
        }
        if self.stages.contains(&Stage::Table1) && self.models.contains(&ModelId::NoLabel) {
            return Err(Error::config("models", "table1 covers model1, model2 and model3 only"));
        }
        if self.kl_draws < crate::inference::predict::MIN_KL_DRAWS {
            return Err(Error::config("kl_draws", "must be at least 100"));
        }
        for (i, &a) in self.alpha_sweep.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::config(
                    format!("alpha_sweep[{i}]"),
                    "must lie strictly inside (0, 1)",
                ));
            }
        }
        if self.stages.contains(&Stage::TheoremCheck) && self.alpha_sweep.is_empty() {
            return Err(Error::config("alpha_sweep", "theorem-check needs at least one alpha"));
        }
        if self.stages.is_empty() {
            return Err(Error::config("stages", "nothing to run"));
        }
        self.prior.validate()?;
        self.grid.validate()?;
        self.mcmc.validate()?;
        if self.grid.sigma != self.truth.sigma() {
            return Err(Error::config("grid.sigma", "must equal truth.sigma"));
        }
        if let Some(q) = &self.quadrature {
            q.validate().map_err(|e| Error::config("quadrature", e.to_string()))?;
        }
        if self.method == Method::Grid
            && self.stages.contains(&Stage::ErrorCurve)
            && !self.grid.contains(&self.truth)?
        {
            return Err(Error::config("grid", "the truth must lie strictly inside the grid box"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}
