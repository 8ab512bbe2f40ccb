use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::dynamics::DynamicsConfig;
use crate::error::{Error, Result};
use crate::geometry::RewardConfig;
use crate::learner::{Expansion, TrainingConfig, ValueModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Provenance of a fitted model. Deliberately free of timestamps so that the
/// same run always produces the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreationInfo {
    pub tool: String,
    pub tool_version: String,
    pub training: Option<TrainingConfig>,
    pub dynamics: Option<DynamicsConfig>,
    pub iterations_run: usize,
    pub samples: usize,
}

impl CreationInfo {
    pub fn new(
        training: Option<TrainingConfig>,
        dynamics: Option<DynamicsConfig>,
        iterations_run: usize,
        samples: usize,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            training,
            dynamics,
            iterations_run,
            samples,
        }
    }
}

/// On-disk form of a [`ValueModel`]. Floats use shortest round-trip decimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub created: CreationInfo,
    pub expansion: Expansion,
    pub norms: Vec<f64>,
    pub gamma: f64,
    pub reward: RewardConfig,
    pub weights: Vec<f64>,
}

impl ModelFile {
    pub fn new(model: &ValueModel, created: CreationInfo) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            created,
            expansion: model.expansion,
            norms: model.norms.clone(),
            gamma: model.gamma,
            reward: model.reward,
            weights: model.weights()?.to_vec(),
        })
    }

    pub fn model(&self) -> Result<ValueModel> {
        let m = ValueModel::unfitted(self.expansion, self.norms.clone(), self.gamma, self.reward)
            .with_weights(self.weights.clone())?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("model file is not valid JSON: {e}")))?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Format(format!(
                    "model format_version {v} is not supported (expected {MODEL_FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::Format("model file has no format_version".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Format(format!("invalid model file: {e}")))
    }
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    write_atomic(path, file.to_json()?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read model {}: {e}", path.display())))?;
    ModelFile::from_json(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
