//! The air combat engagement as a decision process for the learner, plus
//! trajectory sampling of training states.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::iteration::{
    fit_value_iteration_with, greedy_action_index, FitOutcome, FitSettings, IterationDiagnostics,
    Mdp, Transition,
};
use super::value_model::{combat_norms, Expansion, ValueModel};
use crate::dynamics::{DynamicsConfig, Maneuver};
use crate::engine::{random_maneuver, sample_initial_state, step_combat, InitialStateDistribution};
use crate::error::{Error, Result};
use crate::geometry::{
    features, is_dominated, relative_geometry, reward_from_geometry, terminal_status, CombatState,
    RewardConfig, Side,
};

/// Deterministic model of the opponent used inside backups and lookaheads.
#[derive(Debug, Clone)]
pub enum OpponentModel {
    Constant(Maneuver),
    /// Greedy on the value model being evaluated or trained.
    SelfPlay,
    /// Greedy on a fixed model.
    Greedy(Arc<ValueModel>),
}

/// The engagement seen from one side, with the other side folded into the
/// transition function.
#[derive(Debug, Clone)]
pub struct CombatEnv {
    pub dynamics: DynamicsConfig,
    pub reward: RewardConfig,
    pub perspective: Side,
    pub opponent: OpponentModel,
}

impl CombatEnv {
    /// Maneuver the opponent is assumed to fly from `cs`. Greedy opponents
    /// look one step ahead assuming this side flies straight on.
    pub fn predict_opponent(&self, cs: &CombatState, model: &ValueModel) -> Result<Maneuver> {
        let greedy_with = |m: &ValueModel| {
            let inner = CombatEnv {
                dynamics: self.dynamics,
                reward: m.reward,
                perspective: self.perspective.opponent(),
                opponent: OpponentModel::Constant(Maneuver::Continued),
            };
            greedy_action(m, cs, &inner)
        };
        match &self.opponent {
            OpponentModel::Constant(m) => Ok(*m),
            OpponentModel::SelfPlay => greedy_with(model),
            OpponentModel::Greedy(m) => greedy_with(m),
        }
    }

    fn step_with(&self, cs: &CombatState, own: Maneuver, other: Maneuver) -> Result<CombatState> {
        match self.perspective {
            Side::Red => step_combat(cs, own, other, &self.dynamics),
            Side::Blue => step_combat(cs, other, own, &self.dynamics),
        }
    }
}

impl Mdp for CombatEnv {
    type State = CombatState;

    fn action_count(&self) -> usize {
        Maneuver::COUNT
    }

    fn raw_features(&self, s: &CombatState) -> Result<Vec<f64>> {
        Ok(features(s, self.perspective)?.0.to_vec())
    }

    fn successors(&self, s: &CombatState, model: &ValueModel) -> Result<Vec<Transition<CombatState>>> {
        let other = self.predict_opponent(s, model)?;
        Maneuver::ALL
            .iter()
            .map(|&own| {
                let next = self.step_with(s, own, other)?;
                let geom = relative_geometry(&next, self.perspective)?;
                let reward = reward_from_geometry(&geom, &self.reward);
                let won = is_dominated(&next, self.perspective, &self.reward)?;
                let lost = is_dominated(&next, self.perspective.opponent(), &self.reward)?;
                let bonus = self.reward.terminal_bonus;
                let terminal = match (won, lost) {
                    (false, false) => None,
                    (true, false) => Some(bonus),
                    (false, true) => Some(-bonus),
                    (true, true) => Some(0.0),
                };
                Ok(Transition {
                    next,
                    reward,
                    terminal,
                })
            })
            .collect()
    }
}

/// Greedy maneuver for `env.perspective`: the argmax over the library of
/// `r + gamma * V(f(cs, a))`, ties to the lowest library index.
pub fn greedy_action(model: &ValueModel, cs: &CombatState, env: &CombatEnv) -> Result<Maneuver> {
    let i = greedy_action_index(env, cs, model)?;
    Ok(Maneuver::ALL[i])
}

/// Greedy maneuver for `side` using the reward settings stored in `model`.
pub fn greedy_maneuver(
    model: &ValueModel,
    cs: &CombatState,
    side: Side,
    opponent: OpponentModel,
    dynamics: &DynamicsConfig,
) -> Result<Maneuver> {
    let env = CombatEnv {
        dynamics: *dynamics,
        reward: model.reward,
        perspective: side,
        opponent,
    };
    greedy_action(model, cs, &env)
}

/// Opponent flown during training rollouts and backups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpponentSpec {
    Constant(Maneuver),
    Random,
    SelfPlay,
}

impl fmt::Display for OpponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpponentSpec::Constant(m) => write!(f, "constant:{m}"),
            OpponentSpec::Random => f.write_str("random"),
            OpponentSpec::SelfPlay => f.write_str("self"),
        }
    }
}

impl FromStr for OpponentSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "random" | "uniform" | "uniform_random" => Ok(OpponentSpec::Random),
            "self" | "self_play" | "selfplay" => Ok(OpponentSpec::SelfPlay),
            other => match other.split_once(':') {
                Some(("constant", m)) => Ok(OpponentSpec::Constant(m.parse()?)),
                _ => Err(format!(
                    "unknown opponent `{s}` (expected constant:<maneuver>, random or self)"
                )),
            },
        }
    }
}

impl TryFrom<String> for OpponentSpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<OpponentSpec> for String {
    fn from(o: OpponentSpec) -> String {
        o.to_string()
    }
}

impl Serialize for OpponentSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OpponentSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub n_samples: usize,
    pub iterations: usize,
    pub gamma: f64,
    /// Exploration rate of the sampling policy.
    pub epsilon: f64,
    /// Ridge regularization added to the normal equations.
    pub ridge: f64,
    pub resample_each_iteration: bool,
    pub opponent: OpponentSpec,
    pub seed: u64,
    pub expansion: Expansion,
    /// Range normalization, m.
    pub range_scale: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            iterations: 40,
            gamma: 0.95,
            epsilon: 0.25,
            ridge: 1e-6,
            resample_each_iteration: false,
            opponent: OpponentSpec::Constant(Maneuver::Continued),
            seed: 0,
            expansion: Expansion::Quadratic,
            range_scale: 3000.0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!(
                "training.gamma must lie in the valid range [0, 1], got {}",
                self.gamma
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(format!(
                "training.epsilon must lie in [0, 1], got {}",
                self.epsilon
            ));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(format!("training.ridge must be >= 0, got {}", self.ridge));
        }
        if self.iterations == 0 {
            return Err("training.iterations must be >= 1".into());
        }
        let dim = self.expansion.dimension(5);
        if self.n_samples <= dim {
            return Err(format!(
                "training.n_samples must exceed the feature dimension {dim}, got {}",
                self.n_samples
            ));
        }
        if !(self.range_scale.is_finite() && self.range_scale > 0.0) {
            return Err(format!(
                "training.range_scale must be positive, got {}",
                self.range_scale
            ));
        }
        if self.opponent == OpponentSpec::Random {
            return Err(
                "training.opponent `random` is not supported: backups need a deterministic opponent"
                    .into(),
            );
        }
        Ok(())
    }

    pub fn opponent_model(&self) -> OpponentModel {
        match self.opponent {
            OpponentSpec::Constant(m) => OpponentModel::Constant(m),
            _ => OpponentModel::SelfPlay,
        }
    }
}

/// Everything needed to train a combat value model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSetup {
    pub dynamics: DynamicsConfig,
    pub reward: RewardConfig,
    pub init: InitialStateDistribution,
    pub training: TrainingConfig,
    pub max_steps: u32,
}

impl TrainingSetup {
    pub fn validate(&self) -> Result<()> {
        self.dynamics.validate().map_err(Error::Config)?;
        self.reward.validate().map_err(Error::Config)?;
        self.init.validate().map_err(Error::Config)?;
        self.training.validate().map_err(Error::Config)?;
        if self.max_steps == 0 {
            return Err(Error::Config("run.max_steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn env(&self) -> CombatEnv {
        CombatEnv {
            dynamics: self.dynamics,
            reward: self.reward,
            perspective: Side::Red,
            opponent: self.training.opponent_model(),
        }
    }

    pub fn prototype(&self) -> ValueModel {
        ValueModel::unfitted(
            self.training.expansion,
            combat_norms(&self.reward, self.training.range_scale),
            self.training.gamma,
            self.reward,
        )
    }
}

/// Training states gathered by rolling out episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub states: Vec<CombatState>,
    pub seed: u64,
    pub policy: String,
    /// Index of the first state of every rollout.
    pub episode_starts: Vec<usize>,
}

/// Rolls out episodes from random initial states, recording every state at
/// which red makes a decision, until `n` states are collected. Red flies
/// epsilon-greedy on `model` (uniform random without a model); blue flies the
/// training opponent. A rollout restarts on a win, at the step cap, or on a
/// numerical failure.
pub fn trajectory_sample<R: Rng>(
    setup: &TrainingSetup,
    model: Option<&ValueModel>,
    n: usize,
    rng: &mut R,
    seed: u64,
) -> SampleSet {
    let env = setup.env();
    let epsilon = setup.training.epsilon;
    let mut states = Vec::with_capacity(n);
    let mut episode_starts = Vec::new();
    while states.len() < n {
        episode_starts.push(states.len());
        let mut cs = sample_initial_state(&setup.init, &setup.dynamics, rng);
        while states.len() < n {
            match terminal_status(&cs, setup.max_steps, &setup.reward) {
                Ok(o) if !o.is_terminal() => {}
                _ => break,
            }
            states.push(cs);
            let explore = rng.random::<f64>() < epsilon;
            let red = match model {
                Some(m) if !explore => match greedy_action(m, &cs, &env) {
                    Ok(a) => a,
                    Err(_) => break,
                },
                _ => random_maneuver(rng),
            };
            let blue = match (setup.training.opponent, model) {
                (OpponentSpec::Constant(m), _) => m,
                (_, Some(m)) => {
                    match greedy_maneuver(
                        m,
                        &cs,
                        Side::Blue,
                        OpponentModel::Constant(Maneuver::Continued),
                        &setup.dynamics,
                    ) {
                        Ok(a) => a,
                        Err(_) => break,
                    }
                }
                (_, None) => random_maneuver(rng),
            };
            match step_combat(&cs, red, blue, &setup.dynamics) {
                Ok(next) => cs = next,
                Err(_) => break,
            }
        }
    }
    let policy = match model {
        Some(_) => format!("epsilon_greedy:{epsilon} vs {}", setup.training.opponent),
        None => format!("random vs {}", setup.training.opponent),
    };
    SampleSet {
        states,
        seed,
        policy,
        episode_starts,
    }
}

#[derive(Debug, Clone)]
pub struct CombatFit {
    pub model: ValueModel,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub samples: SampleSet,
}

/// Fitted value iteration on the combat engagement from red's perspective.
pub fn fit_value_iteration(
    setup: &TrainingSetup,
    on_iteration: impl FnMut(&IterationDiagnostics),
) -> Result<CombatFit> {
    setup.validate()?;
    let env = setup.env();
    let seed = setup.training.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last: Option<SampleSet> = None;
    let settings = FitSettings {
        iterations: setup.training.iterations,
        ridge: setup.training.ridge,
        resample_each_iteration: setup.training.resample_each_iteration,
    };
    let FitOutcome {
        model, diagnostics, ..
    } = fit_value_iteration_with(
        &env,
        &setup.prototype(),
        &settings,
        |model| {
            let set = trajectory_sample(setup, model, setup.training.n_samples, &mut rng, seed);
            let states = set.states.clone();
            last = Some(set);
            Ok(states)
        },
        on_iteration,
    )?;
    Ok(CombatFit {
        model,
        diagnostics,
        samples: last.expect("sample set drawn before the first iteration"),
    })
}
