//! Episode orchestration: randomized initial states, simultaneous two-craft
//! stepping, scripted and learned policies, and batch evaluation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rk4_step, wrap_angle, AircraftState, DynamicsConfig, Maneuver};
use crate::error::{Error, Result};
use crate::geometry::{
    relative_geometry, terminal_status, total_reward, CombatState, Outcome, RewardConfig, Side,
};
use crate::learner::{greedy_maneuver, OpponentModel, ValueModel};

/// Mean initial condition of one craft. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CraftMean {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta_deg: f64,
    pub psi_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialStateDistribution {
    pub red: CraftMean,
    pub blue: CraftMean,
    /// Gaussian standard deviation of each position component, m.
    pub position_sigma: f64,
    /// Uniform half-range for pitch and yaw, degrees.
    pub angle_halfwidth_deg: f64,
}

impl Default for InitialStateDistribution {
    fn default() -> Self {
        Self {
            red: CraftMean {
                v: 250.0,
                x: 0.0,
                y: 0.0,
                z: 2900.0,
                theta_deg: 0.0,
                psi_deg: 45.0,
            },
            blue: CraftMean {
                v: 204.0,
                x: 3000.0,
                y: 3000.0,
                z: 2800.0,
                theta_deg: 0.0,
                psi_deg: -135.0,
            },
            position_sigma: 10.0,
            angle_halfwidth_deg: 3.0,
        }
    }
}

impl InitialStateDistribution {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.position_sigma.is_finite() && self.position_sigma >= 0.0) {
            return Err(format!(
                "init.position_sigma must be >= 0, got {}",
                self.position_sigma
            ));
        }
        if !(self.angle_halfwidth_deg.is_finite() && self.angle_halfwidth_deg >= 0.0) {
            return Err(format!(
                "init.angle_halfwidth_deg must be >= 0, got {}",
                self.angle_halfwidth_deg
            ));
        }
        for (side, m) in [("red", &self.red), ("blue", &self.blue)] {
            let all = [m.v, m.x, m.y, m.z, m.theta_deg, m.psi_deg];
            if all.iter().any(|c| !c.is_finite()) || m.v <= 0.0 {
                return Err(format!("init.{side} must be finite with v > 0"));
            }
        }
        Ok(())
    }
}

fn sample_craft<R: Rng>(
    mean: &CraftMean,
    sigma: f64,
    halfwidth_deg: f64,
    dynamics: &DynamicsConfig,
    rng: &mut R,
) -> AircraftState {
    let mut normal = |mu: f64| mu + sigma * rng.sample::<f64, _>(StandardNormal);
    let x = normal(mean.x);
    let y = normal(mean.y);
    let z = normal(mean.z);
    let mut uniform = |mu_deg: f64| (mu_deg + halfwidth_deg * (2.0 * rng.random::<f64>() - 1.0)).to_radians();
    let theta = uniform(mean.theta_deg);
    let psi = uniform(mean.psi_deg);
    AircraftState {
        v: mean.v.clamp(dynamics.v_min, dynamics.v_max),
        x,
        y,
        z,
        theta: theta.clamp(-dynamics.theta_max, dynamics.theta_max),
        psi: wrap_angle(psi),
        bank: 0.0,
    }
}

/// Positions are Gaussian around the means, pitch and yaw uniform within the
/// half-width, airspeeds fixed at their means, bank zero, step zero.
pub fn sample_initial_state<R: Rng>(
    dist: &InitialStateDistribution,
    dynamics: &DynamicsConfig,
    rng: &mut R,
) -> CombatState {
    let red = sample_craft(&dist.red, dist.position_sigma, dist.angle_halfwidth_deg, dynamics, rng);
    let blue = sample_craft(&dist.blue, dist.position_sigma, dist.angle_halfwidth_deg, dynamics, rng);
    CombatState { red, blue, step: 0 }
}

/// Advances both craft one decision interval; both maneuvers act on the
/// pre-step state.
pub fn step_combat(
    cs: &CombatState,
    red: Maneuver,
    blue: Maneuver,
    dynamics: &DynamicsConfig,
) -> Result<CombatState> {
    Ok(CombatState {
        red: rk4_step(&cs.red, &dynamics.controls(red), dynamics)?,
        blue: rk4_step(&cs.blue, &dynamics.controls(blue), dynamics)?,
        step: cs.step + 1,
    })
}

/// How a craft picks its maneuver during an episode.
#[derive(Debug, Clone)]
pub enum Policy {
    Constant(Maneuver),
    UniformRandom,
    /// Greedy one-step lookahead on a fitted value model.
    Greedy(Arc<ValueModel>),
    /// Uniform random with probability `epsilon`, greedy otherwise. Without a
    /// model the greedy branch also falls back to uniform random.
    EpsilonGreedy {
        model: Option<Arc<ValueModel>>,
        epsilon: f64,
    },
}

impl Policy {
    pub fn label(&self) -> String {
        match self {
            Policy::Constant(m) => format!("constant:{m}"),
            Policy::UniformRandom => "random".into(),
            Policy::Greedy(_) => "greedy".into(),
            Policy::EpsilonGreedy { epsilon, .. } => format!("epsilon_greedy:{epsilon}"),
        }
    }

    /// Deterministic stand-in for this policy inside another craft's lookahead.
    pub fn as_opponent_model(&self) -> OpponentModel {
        match self {
            Policy::Constant(m) => OpponentModel::Constant(*m),
            Policy::Greedy(model) | Policy::EpsilonGreedy { model: Some(model), .. } => {
                OpponentModel::Greedy(Arc::clone(model))
            }
            _ => OpponentModel::Constant(Maneuver::Continued),
        }
    }

    pub fn choose<R: Rng>(
        &self,
        cs: &CombatState,
        side: Side,
        opponent: &Policy,
        sim: &SimConfig,
        rng: &mut R,
    ) -> Result<Maneuver> {
        match self {
            Policy::Constant(m) => Ok(*m),
            Policy::UniformRandom => Ok(random_maneuver(rng)),
            Policy::Greedy(model) => greedy_maneuver(
                model,
                cs,
                side,
                opponent.as_opponent_model(),
                &sim.dynamics,
            ),
            Policy::EpsilonGreedy { model, epsilon } => {
                let explore = rng.random::<f64>() < *epsilon;
                match model {
                    Some(model) if !explore => greedy_maneuver(
                        model,
                        cs,
                        side,
                        opponent.as_opponent_model(),
                        &sim.dynamics,
                    ),
                    _ => Ok(random_maneuver(rng)),
                }
            }
        }
    }
}

pub fn random_maneuver<R: Rng>(rng: &mut R) -> Maneuver {
    Maneuver::ALL[rng.random_range(0..Maneuver::COUNT)]
}

/// Simulation settings shared by episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dynamics: DynamicsConfig,
    pub reward: RewardConfig,
    pub max_steps: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dynamics: DynamicsConfig::default(),
            reward: RewardConfig::default(),
            max_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub step: u32,
    pub t_s: f64,
    pub red: AircraftState,
    pub blue: AircraftState,
    /// Maneuvers applied from this state; `None` on the final row.
    pub maneuver_red: Option<Maneuver>,
    pub maneuver_blue: Option<Maneuver>,
    pub aa_red: f64,
    pub ata_red: f64,
    pub range_m: f64,
    pub reward_red: f64,
    pub reward_blue: f64,
}

impl EpisodeRow {
    pub fn combat_state(&self) -> CombatState {
        CombatState {
            red: self.red,
            blue: self.blue,
            step: self.step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub rows: Vec<EpisodeRow>,
    pub outcome: Outcome,
    pub seed: u64,
    /// Set when the rollout stopped on a numerical failure.
    pub error: Option<String>,
}

impl EpisodeRecord {
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn terminal_rewards(&self) -> (f64, f64) {
        self.rows
            .last()
            .map_or((0.0, 0.0), |r| (r.reward_red, r.reward_blue))
    }
}

fn make_row(cs: &CombatState, dt: f64, reward: &RewardConfig) -> Result<EpisodeRow> {
    let g = relative_geometry(cs, Side::Red)?;
    Ok(EpisodeRow {
        step: cs.step,
        t_s: cs.step as f64 * dt,
        red: cs.red,
        blue: cs.blue,
        maneuver_red: None,
        maneuver_blue: None,
        aa_red: g.aa,
        ata_red: g.ata,
        range_m: g.range,
        reward_red: total_reward(cs, Side::Red, reward)?,
        reward_blue: total_reward(cs, Side::Blue, reward)?,
    })
}

fn rollout<R: Rng>(
    red: &Policy,
    blue: &Policy,
    mut cs: CombatState,
    sim: &SimConfig,
    rng: &mut R,
    rows: &mut Vec<EpisodeRow>,
) -> Result<Outcome> {
    loop {
        rows.push(make_row(&cs, sim.dynamics.dt, &sim.reward)?);
        let outcome = terminal_status(&cs, sim.max_steps, &sim.reward)?;
        if outcome.is_terminal() {
            return Ok(outcome);
        }
        let red_m = red.choose(&cs, Side::Red, blue, sim, rng)?;
        let blue_m = blue.choose(&cs, Side::Blue, red, sim, rng)?;
        let row = rows.last_mut().expect("row pushed above");
        row.maneuver_red = Some(red_m);
        row.maneuver_blue = Some(blue_m);
        cs = step_combat(&cs, red_m, blue_m, &sim.dynamics)?;
    }
}

/// Plays one episode from an initial state drawn with `seed`.
///
/// The terminal test precedes every decision, so a winning initial draw ends
/// the episode with a single row. A numerical failure keeps the rows recorded
/// so far, scores the episode as a draw and stores the error message.
pub fn run_episode(
    red: &Policy,
    blue: &Policy,
    dist: &InitialStateDistribution,
    sim: &SimConfig,
    seed: u64,
) -> EpisodeRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs = sample_initial_state(dist, &sim.dynamics, &mut rng);
    run_episode_from(red, blue, cs, sim, &mut rng, seed)
}

pub fn run_episode_from<R: Rng>(
    red: &Policy,
    blue: &Policy,
    initial: CombatState,
    sim: &SimConfig,
    rng: &mut R,
    seed: u64,
) -> EpisodeRecord {
    let mut rows = Vec::with_capacity(sim.max_steps as usize + 1);
    match rollout(red, blue, initial, sim, rng, &mut rows) {
        Ok(outcome) => EpisodeRecord {
            rows,
            outcome,
            seed,
            error: None,
        },
        Err(e) => EpisodeRecord {
            rows,
            outcome: Outcome::Draw,
            seed,
            error: Some(e.to_string()),
        },
    }
}

/// Seed of episode `index` in a batch started from `base`.
pub fn episode_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub red_policy: String,
    pub blue_policy: String,
    pub episodes: usize,
    pub red_wins: usize,
    pub blue_wins: usize,
    pub draws: usize,
    pub red_win_rate: f64,
    pub blue_win_rate: f64,
    pub draw_rate: f64,
    /// Mean number of decision steps per episode.
    pub mean_length: f64,
    pub mean_terminal_reward_red: f64,
    pub mean_terminal_reward_blue: f64,
    /// Episodes that stopped on a numerical failure.
    pub failures: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
}

pub fn summarize(red: &Policy, blue: &Policy, records: &[EpisodeRecord], base_seed: u64) -> EvalSummary {
    let n = records.len();
    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
    let (red_wins, blue_wins, draws) = (count(Outcome::RedWin), count(Outcome::BlueWin), count(Outcome::Draw));
    let nf = n.max(1) as f64;
    let mean = |f: &dyn Fn(&EpisodeRecord) -> f64| records.iter().map(f).sum::<f64>() / nf;
    EvalSummary {
        red_policy: red.label(),
        blue_policy: blue.label(),
        episodes: n,
        red_wins,
        blue_wins,
        draws,
        red_win_rate: red_wins as f64 / nf,
        blue_win_rate: blue_wins as f64 / nf,
        draw_rate: draws as f64 / nf,
        mean_length: mean(&|r| r.steps() as f64),
        mean_terminal_reward_red: mean(&|r| r.terminal_rewards().0),
        mean_terminal_reward_blue: mean(&|r| r.terminal_rewards().1),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        base_seed,
        seeds: records.iter().map(|r| r.seed).collect(),
    }
}

/// Plays `n_episodes` independent episodes with seeds derived from `base_seed`.
/// Episodes run in parallel; the records come back in episode order.
pub fn run_batch(
    red: &Policy,
    blue: &Policy,
    dist: &InitialStateDistribution,
    sim: &SimConfig,
    n_episodes: usize,
    base_seed: u64,
) -> Vec<EpisodeRecord> {
    (0..n_episodes as u64)
        .into_par_iter()
        .map(|i| run_episode(red, blue, dist, sim, episode_seed(base_seed, i)))
        .collect()
}

pub fn evaluate_policies(
    red: &Policy,
    blue: &Policy,
    dist: &InitialStateDistribution,
    sim: &SimConfig,
    n_episodes: usize,
    base_seed: u64,
) -> Result<EvalSummary> {
    if n_episodes == 0 {
        return Err(Error::Config("episodes must be >= 1".into()));
    }
    let records = run_batch(red, blue, dist, sim, n_episodes, base_seed);
    Ok(summarize(red, blue, &records, base_seed))
}
