//! Run configuration: a JSON document whose keys mirror the CLI flags.
//! Flags win over config-file values; both fall back to defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rgm_core::inference::{Hyperparameters, McmcConfig};
use rgm_core::io::ColumnMapping;
use rgm_core::sim::{Scenario, ScenarioSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub scenario: Option<u32>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub replicates: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
    pub rule: Option<String>,
    pub alpha: Option<f64>,
    pub standardize: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub reference_ordering: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub estimate: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub hyper: Option<Hyperparameters>,
    pub prop_sd_coeff: Option<f64>,
    pub prop_sd_threshold: Option<f64>,
    pub adapt: Option<bool>,
    pub column_mapping: Option<ColumnMapping>,
    pub effect_magnitude: Option<f64>,
    pub noise_variance: Option<f64>,
    pub a_density: Option<f64>,
    pub b_density: Option<f64>,
    pub t_dof: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }

    /// Starts from the config file (when given) and overlays flag values.
    pub fn from_file_and_flags(config_path: Option<&Path>, overlay: RunConfig) -> CliResult<Self> {
        let mut base = match config_path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! overlay_field {
            ($($field:ident),*) => {
                $(if overlay.$field.is_some() { base.$field = overlay.$field; })*
            };
        }
        overlay_field!(
            seed, scenario, n, p, replicates, iterations, burn_in, thin, chains, rule, alpha,
            standardize, out_dir, reference_ordering, data, samples, estimate, pairs, hyper,
            prop_sd_coeff, prop_sd_threshold, adapt, column_mapping, effect_magnitude,
            noise_variance, a_density, b_density, t_dof
        );
        Ok(base)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn replicates(&self) -> usize {
        self.replicates.unwrap_or(1)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        self.hyper.clone().unwrap_or_default()
    }

    /// Scenario spec from config values; scenario id is required.
    pub fn scenario_spec(&self, seed: u64) -> CliResult<ScenarioSpec> {
        let id = self
            .scenario
            .ok_or_else(|| CliError::Validation("--scenario is required".into()))?;
        let scenario = Scenario::from_id(id).map_err(CliError::from)?;
        let mut spec = ScenarioSpec::new(scenario, seed);
        if let Some(n) = self.n {
            spec.n = n;
        }
        if let Some(p) = self.p {
            spec.p = p;
        }
        if let Some(v) = self.effect_magnitude {
            spec.effect_magnitude = v;
        }
        if let Some(v) = self.noise_variance {
            spec.noise_variance = v;
        }
        if let Some(v) = self.a_density {
            spec.a_density = v;
        }
        if let Some(v) = self.b_density {
            spec.b_density = v;
        }
        if let Some(v) = self.t_dof {
            spec.t_dof = Some(v);
        }
        spec.validate().map_err(CliError::from)?;
        Ok(spec)
    }

    /// MCMC config with a replicate-specific seed.
    pub fn mcmc_config(&self, seed: u64) -> CliResult<McmcConfig> {
        let mut config = McmcConfig {
            seed,
            ..McmcConfig::default()
        };
        if let Some(v) = self.iterations {
            config.iterations = v;
        }
        if let Some(v) = self.burn_in {
            config.burn_in = v;
        }
        if let Some(v) = self.thin {
            config.thin = v;
        }
        if let Some(v) = self.chains {
            config.chains = v;
        }
        if let Some(v) = self.prop_sd_coeff {
            config.prop_sd_coeff = v;
        }
        if let Some(v) = self.prop_sd_threshold {
            config.prop_sd_threshold = v;
        }
        if let Some(v) = self.adapt {
            config.adapt = v;
        }
        config.validate().map_err(CliError::from)?;
        Ok(config)
    }
}

/// Selection rule parsed from `--rule` and `--alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleChoice {
    Mpm,
    Fdr(f64),
    Hpm,
}

impl RunConfig {
    pub fn rule_choice(&self) -> CliResult<RuleChoice> {
        match self.rule.as_deref().unwrap_or("mpm") {
            "mpm" => Ok(RuleChoice::Mpm),
            "fdr" => Ok(RuleChoice::Fdr(self.alpha.unwrap_or(0.10))),
            "hpm" => Ok(RuleChoice::Hpm),
            other => Err(CliError::Validation(format!(
                "unknown rule {other:?}; expected mpm, fdr or hpm"
            ))),
        }
    }
}
