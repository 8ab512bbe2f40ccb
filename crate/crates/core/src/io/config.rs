use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsConfig;
use crate::engine::{InitialStateDistribution, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::RewardConfig;
use crate::learner::{TrainingConfig, TrainingSetup};

/// Episode and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub max_steps: u32,
    /// Episodes played by `rollout` and `eval`.
    pub episodes: usize,
    /// Base seed of rollout and evaluation batches.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Default model path for `train` output and `rollout`/`eval` input.
    pub model: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            max_steps: 200,
            episodes: 100,
            seed: 0,
            out_dir: PathBuf::from("runs"),
            model: PathBuf::from("model.json"),
        }
    }
}

/// The full experiment configuration, one TOML section per component.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dynamics: DynamicsConfig,
    pub reward: RewardConfig,
    pub training: TrainingConfig,
    pub init: InitialStateDistribution,
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The effective configuration as TOML; loading it back gives `self`.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.setup().validate()?;
        if self.run.seed > i64::MAX as u64 || self.training.seed > i64::MAX as u64 {
            return Err(Error::Config("seeds must fit in a signed 64-bit integer".into()));
        }
        Ok(())
    }

    pub fn setup(&self) -> TrainingSetup {
        TrainingSetup {
            dynamics: self.dynamics,
            reward: self.reward,
            init: self.init,
            training: self.training,
            max_steps: self.run.max_steps,
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            dynamics: self.dynamics,
            reward: self.reward,
            max_steps: self.run.max_steps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn partial_sections_default_the_rest() {
        let cfg = RunConfig::from_toml_str("[training]\ngamma = 0.9\n[run]\nepisodes = 7\n").unwrap();
        assert_eq!(cfg.training.gamma, 0.9);
        assert_eq!(cfg.training.n_samples, 100_000);
        assert_eq!(cfg.run.episodes, 7);
        assert_eq!(cfg.run.max_steps, 200);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("[reward]\nrd = 3.0\n").unwrap_err();
        assert!(err.to_string().contains("rd"), "{err}");
        assert!(RunConfig::from_toml_str("[bogus]\nx = 1\n").is_err());
    }

    #[test]
    fn invalid_values_name_the_key() {
        let err = RunConfig::from_toml_str("[training]\ngamma = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("[0, 1]"), "{err}");
    }

    #[test]
    fn dump_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.training.opponent = "self".parse().unwrap();
        cfg.reward.weights = [0.1, 0.2, 0.7];
        cfg.init.red.psi_deg = 12.5;
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
