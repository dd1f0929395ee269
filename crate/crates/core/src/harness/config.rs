//! Experiment configuration files (TOML).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{make_abrupt, make_gradual};
use crate::learner::{EviEpsilon, LearnerConfig, RestartMode, VariationInput};
use crate::nonstationary::NonstationaryMdp;
use crate::rng::env_seed;

/// Where the environment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Abrupt {
        n_states: usize,
        n_actions: usize,
        n_changes: usize,
        magnitude: f64,
        /// Fixed generation seed; defaults to the replication seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    Gradual {
        n_states: usize,
        n_actions: usize,
        budget: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// A serialized environment; its horizon is replaced by the experiment's.
    File { path: PathBuf },
}

impl EnvironmentSpec {
    /// Builds the environment for one replication.
    pub fn build(&self, horizon: usize, root_seed: u64) -> Result<NonstationaryMdp> {
        match self {
            EnvironmentSpec::Abrupt { n_states, n_actions, n_changes, magnitude, seed } => make_abrupt(
                seed.unwrap_or_else(|| env_seed(root_seed)),
                *n_states,
                *n_actions,
                horizon,
                *n_changes,
                *magnitude,
            ),
            EnvironmentSpec::Gradual { n_states, n_actions, budget, seed } => {
                make_gradual(seed.unwrap_or_else(|| env_seed(root_seed)), *n_states, *n_actions, horizon, *budget)
            }
            EnvironmentSpec::File { path } => {
                let env = NonstationaryMdp::from_json(&std::fs::read_to_string(path)?)?;
                if horizon > env.horizon() {
                    return Err(Error::InvalidConfig(format!(
                        "horizon {horizon} exceeds the {} steps stored in {}",
                        env.horizon(),
                        path.display()
                    )));
                }
                env.with_horizon(horizon)
            }
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let EnvironmentSpec::File { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationBounds {
    pub reward: f64,
    pub transition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub mode: RestartMode,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// `L` for count-restart; defaults to the environment's number of changes.
    #[serde(default)]
    pub l_changes: Option<usize>,
    /// Upper bounds replacing the measured variation.
    #[serde(default)]
    pub variation_bounds: Option<VariationBounds>,
    /// Fixed EVI precision; defaults to `1/sqrt(t_k)`.
    #[serde(default)]
    pub evi_epsilon: Option<f64>,
}

fn default_delta() -> f64 {
    0.05
}

impl LearnerSpec {
    pub fn config_for(&self, mode: RestartMode, env: &NonstationaryMdp) -> Result<LearnerConfig> {
        let mut cfg = LearnerConfig::new(mode, self.delta);
        if let Some(b) = &self.variation_bounds {
            cfg = cfg.with_variation(VariationInput::Bounds { reward: b.reward, transition: b.transition });
        }
        if let Some(e) = self.evi_epsilon {
            cfg = cfg.with_evi_epsilon(EviEpsilon::Fixed(e));
        }
        if mode == RestartMode::CountRestart {
            let l = match self.l_changes {
                Some(l) => l,
                None => env.change_count()?,
            };
            cfg = cfg.with_l_changes(l);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Extra outputs per run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write the prefix regret curve (quadratic in the horizon).
    #[serde(default)]
    pub curve: bool,
    /// Also report `Σ_t (ρ*(M_t) - r_t)`.
    #[serde(default)]
    pub alt_regret: bool,
}

/// Sweep dimensions; an omitted dimension keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub budgets: Option<Vec<f64>>,
    #[serde(default)]
    pub n_changes: Option<Vec<usize>>,
    #[serde(default)]
    pub modes: Option<Vec<RestartMode>>,
    #[serde(default)]
    pub horizons: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub environment: EnvironmentSpec,
    pub learner: LearnerSpec,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a config file; relative environment paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml(&std::fs::read_to_string(path)?)?;
        spec.environment.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        let distinct: BTreeSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("seeds must be distinct".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        if let EnvironmentSpec::File { path } = &self.environment {
            if !path.exists() {
                return Err(Error::InvalidConfig(format!("environment file {} does not exist", path.display())));
            }
        }
        if let Some(sweep) = &self.sweep {
            let empty = [
                ("budgets", sweep.budgets.as_ref().map(Vec::len)),
                ("n_changes", sweep.n_changes.as_ref().map(Vec::len)),
                ("modes", sweep.modes.as_ref().map(Vec::len)),
                ("horizons", sweep.horizons.as_ref().map(Vec::len)),
            ];
            if let Some((name, _)) = empty.iter().find(|(_, n)| *n == Some(0)) {
                return Err(Error::InvalidConfig(format!("sweep dimension `{name}` is empty")));
            }
            let generator_mismatch = match self.environment {
                EnvironmentSpec::Abrupt { .. } => sweep.budgets.is_some(),
                EnvironmentSpec::Gradual { .. } => sweep.n_changes.is_some(),
                EnvironmentSpec::File { .. } => sweep.budgets.is_some() || sweep.n_changes.is_some(),
            };
            if generator_mismatch {
                return Err(Error::InvalidConfig("sweep dimension does not apply to this environment".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
horizon = 300
seeds = [1, 2, 3]

[environment]
generator = "abrupt"
n_states = 3
n_actions = 2
n_changes = 2
magnitude = 0.3

[learner]
mode = "variation-restart"
"#;

    #[test]
    fn parses_with_defaults() {
        let spec = ExperimentSpec::from_toml(BASIC).unwrap();
        assert_eq!(spec.learner.delta, 0.05);
        assert_eq!(spec.workers, 1);
        assert_eq!(spec.learner.mode, RestartMode::VariationRestart);
    }

    #[test]
    fn rejects_bad_specs() {
        let dup = BASIC.replace("[1, 2, 3]", "[1, 1]");
        assert!(ExperimentSpec::from_toml(&dup).is_err());
        let empty = format!("{BASIC}\n[sweep]\nmodes = []\n");
        assert!(ExperimentSpec::from_toml(&empty).unwrap_err().to_string().contains("modes"));
        let wrong = format!("{BASIC}\n[sweep]\nbudgets = [0.1]\n");
        assert!(ExperimentSpec::from_toml(&wrong).is_err());
        let missing = BASIC.replace("generator = \"abrupt\"", "generator = \"file\"\npath = \"/nonexistent.json\"");
        assert!(ExperimentSpec::from_toml(&missing.replace("n_states = 3\nn_actions = 2\nn_changes = 2\nmagnitude = 0.3\n", "")).is_err());
    }

    #[test]
    fn count_restart_defaults_to_change_count() {
        let spec = ExperimentSpec::from_toml(BASIC).unwrap();
        let env = spec.environment.build(spec.horizon, 1).unwrap();
        let cfg = spec.learner.config_for(RestartMode::CountRestart, &env).unwrap();
        assert_eq!(cfg.l_changes, Some(2));
    }
}
