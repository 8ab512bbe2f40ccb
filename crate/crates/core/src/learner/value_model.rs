use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{features, CombatState, FeatureVector, RewardConfig, Side};

/// Basis built on top of the normalized raw features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    /// Normalized raw features, no bias column. Used for one-hot tabular bases.
    Raw,
    /// Constant column only.
    Bias,
    /// `[1, f_1, .., f_d]`.
    Linear,
    /// `[1, f_1, .., f_d, f_i * f_j for i <= j]`, pairs in row-major order.
    Quadratic,
}

impl Expansion {
    pub fn dimension(self, raw_len: usize) -> usize {
        match self {
            Expansion::Raw => raw_len,
            Expansion::Bias => 1,
            Expansion::Linear => 1 + raw_len,
            Expansion::Quadratic => 1 + raw_len + raw_len * (raw_len + 1) / 2,
        }
    }
}

/// Linear-in-parameters value function over an expanded feature basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueModel {
    pub expansion: Expansion,
    /// Divisors applied to each raw feature before expansion.
    pub norms: Vec<f64>,
    pub gamma: f64,
    pub reward: RewardConfig,
    /// `None` until the model has been fitted.
    pub weights: Option<Vec<f64>>,
}

/// Combat normalization: `[pi, pi, h_scale, v_scale, range_scale]`.
pub fn combat_norms(reward: &RewardConfig, range_scale: f64) -> Vec<f64> {
    vec![PI, PI, reward.h_scale, reward.v_scale, range_scale]
}

impl ValueModel {
    pub fn unfitted(expansion: Expansion, norms: Vec<f64>, gamma: f64, reward: RewardConfig) -> Self {
        Self {
            expansion,
            norms,
            gamma,
            reward,
            weights: None,
        }
    }

    /// Quadratic model over the five combat features with all-zero weights.
    pub fn combat_zero(gamma: f64, reward: RewardConfig, range_scale: f64) -> Self {
        Self::unfitted(
            Expansion::Quadratic,
            combat_norms(&reward, range_scale),
            gamma,
            reward,
        )
        .with_zero_weights()
    }

    pub fn raw_len(&self) -> usize {
        self.norms.len()
    }

    pub fn dimension(&self) -> usize {
        self.expansion.dimension(self.raw_len())
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: weights.len(),
            });
        }
        Ok(Self {
            weights: Some(weights),
            ..self.clone()
        })
    }

    pub fn with_zero_weights(&self) -> Self {
        Self {
            weights: Some(vec![0.0; self.dimension()]),
            ..self.clone()
        }
    }

    pub fn weights(&self) -> Result<&[f64]> {
        self.weights.as_deref().ok_or(Error::Unfitted)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.norms.iter().any(|n| !n.is_finite() || *n == 0.0) {
            return Err(Error::Config("normalization constants must be finite and nonzero".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension(),
                    got: w.len(),
                });
            }
        }
        Ok(())
    }

    /// Value of a raw (unnormalized) feature vector.
    pub fn value_of_raw(&self, raw: &[f64]) -> Result<f64> {
        let weights = self.weights()?;
        let phi = expand_features(raw, self)?;
        Ok(dot(weights, &phi))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalizes `raw` by the model norms and expands it into the model basis.
pub fn expand_features(raw: &[f64], model: &ValueModel) -> Result<Vec<f64>> {
    if raw.len() != model.raw_len() {
        return Err(Error::DimensionMismatch {
            expected: model.raw_len(),
            got: raw.len(),
        });
    }
    let f: Vec<f64> = raw.iter().zip(&model.norms).map(|(r, n)| r / n).collect();
    let mut out = Vec::with_capacity(model.dimension());
    match model.expansion {
        Expansion::Raw => out.extend_from_slice(&f),
        Expansion::Bias => out.push(1.0),
        Expansion::Linear => {
            out.push(1.0);
            out.extend_from_slice(&f);
        }
        Expansion::Quadratic => {
            out.push(1.0);
            out.extend_from_slice(&f);
            for i in 0..f.len() {
                for j in i..f.len() {
                    out.push(f[i] * f[j]);
                }
            }
        }
    }
    Ok(out)
}

pub fn expand_combat_features(raw: &FeatureVector, model: &ValueModel) -> Result<Vec<f64>> {
    expand_features(raw.as_slice(), model)
}

/// Approximate value of `cs` seen from `perspective`.
pub fn evaluate(model: &ValueModel, cs: &CombatState, perspective: Side) -> Result<f64> {
    model.weights()?;
    let raw = features(cs, perspective)?;
    model.value_of_raw(raw.as_slice())
}
