//! Declarative experiment grids for `simulate`.
//!
//! A TOML file names the scenario/β grid, the interval methods to run, and
//! the replication budget; `--reps` and `--seed` on the command line win
//! over the file. Example:
//!
//! ```toml
//! alpha = 0.1
//! reps = 1000
//! seed = 42
//! methods = ["adjusted", "subsampling", "hulc"]
//!
//! [[grid]]
//! setting = 1            # 1 binary-uniform, 2 binary-beta, 3 simplex-shift
//! betas = [1.0, 0.5, 0.0]
//! n = 1000
//!
//! [options]
//! resample_reps = 1000
//! tcal_reps = 1000
//! ```

use ece_ci::{MethodChoice, RunOptions, Scenario, SettingConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Core(#[from] ece_ci::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_methods")]
    methods: Vec<String>,
    grid: Vec<GridEntry>,
    #[serde(default)]
    options: OptionsSection,
}

fn default_alpha() -> f64 {
    0.1
}

fn default_reps() -> usize {
    1000
}

fn default_methods() -> Vec<String> {
    vec![String::from("adjusted")]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridEntry {
    /// Scenario index: 1 binary-uniform, 2 binary-beta, 3 simplex-shift.
    setting: u8,
    betas: Vec<f64>,
    n: Option<usize>,
    k: Option<usize>,
    cells_per_axis: Option<usize>,
}

/// Mirrors the runner knobs; omitted fields keep the library defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsSection {
    resample_reps: Option<usize>,
    tcal_reps: Option<usize>,
    subsample_size: Option<usize>,
    rate_exponent: Option<f64>,
    hulc_delta: Option<f64>,
    quad_tol: Option<f64>,
}

impl Default for OptionsSection {
    fn default() -> OptionsSection {
        OptionsSection {
            resample_reps: None,
            tcal_reps: None,
            subsample_size: None,
            rate_exponent: None,
            hulc_delta: None,
            quad_tol: None,
        }
    }
}

/// Everything `simulate` needs, fully resolved and validated.
#[derive(Debug)]
pub struct ResolvedPlan {
    pub grid: Vec<SettingConfig>,
    pub methods: Vec<MethodChoice>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub options: RunOptions,
}

impl SimulateConfig {
    pub fn parse(text: &str) -> Result<SimulateConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Applies command-line overrides and expands the grid, validating each
    /// point's geometry up front.
    pub fn resolve(
        self,
        reps_override: Option<usize>,
        seed_override: Option<u64>,
    ) -> Result<ResolvedPlan, ConfigError> {
        let methods = self
            .methods
            .iter()
            .map(|name| name.parse::<MethodChoice>().map_err(ConfigError::Invalid))
            .collect::<Result<Vec<_>, _>>()?;
        if methods.is_empty() {
            return Err(ConfigError::Invalid(String::from("`methods` is empty")));
        }

        let mut grid = Vec::new();
        for entry in &self.grid {
            let scenario = Scenario::from_index(entry.setting).ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "setting {} unknown; use 1, 2, or 3",
                    entry.setting
                ))
            })?;
            if entry.betas.is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "setting {} lists no betas",
                    entry.setting
                )));
            }
            for &beta in &entry.betas {
                let mut cfg = SettingConfig::new(scenario, beta)?;
                if let Some(n) = entry.n {
                    cfg.n = n;
                }
                if let Some(k) = entry.k {
                    cfg.k = k;
                }
                if let Some(cells) = entry.cells_per_axis {
                    cfg.cells_per_axis = cells;
                }
                cfg.validate()?;
                cfg.partition_spec()?;
                grid.push(cfg);
            }
        }
        if grid.is_empty() {
            return Err(ConfigError::Invalid(String::from(
                "config defines no grid points",
            )));
        }

        let defaults = RunOptions::default();
        let options = RunOptions {
            resample_reps: self.options.resample_reps.unwrap_or(defaults.resample_reps),
            tcal_reps: self.options.tcal_reps.unwrap_or(defaults.tcal_reps),
            subsample_size: self.options.subsample_size.or(defaults.subsample_size),
            rate_exponent: self.options.rate_exponent.unwrap_or(defaults.rate_exponent),
            hulc_delta: self.options.hulc_delta.unwrap_or(defaults.hulc_delta),
            quad_tol: self.options.quad_tol.unwrap_or(defaults.quad_tol),
        };

        Ok(ResolvedPlan {
            grid,
            methods,
            reps: reps_override.unwrap_or(self.reps),
            alpha: self.alpha,
            seed: seed_override.unwrap_or(self.seed),
            options,
        })
    }
}
