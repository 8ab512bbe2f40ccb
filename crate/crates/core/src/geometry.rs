//! Relative engagement geometry, shaped reward, value features and the
//! dominated-area win test.
//!
//! Angles are tail-referenced: `ata = 0` means the own nose points straight
//! at the opponent and `aa = 0` means the own position sits on the
//! opponent's six. Both lie in `[0, pi]`. Because each perspective uses its
//! own line of sight, the two views are supplementary:
//! `aa(blue) = pi - ata(red)` and `ata(blue) = pi - aa(red)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{AircraftState, DynamicsConfig};

/// Minimum separation for which line-of-sight angles are defined, m.
pub const MIN_RANGE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("aircraft coincident: range {range:.6} m is below {MIN_RANGE} m")]
    Coincident { range: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Red,
    Blue,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Red => Side::Blue,
            Side::Blue => Side::Red,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    RedWin,
    BlueWin,
    Draw,
    Ongoing,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Ongoing
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::RedWin => "RedWin",
            Outcome::BlueWin => "BlueWin",
            Outcome::Draw => "Draw",
            Outcome::Ongoing => "Ongoing",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Both craft plus the number of decision steps taken so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombatState {
    pub red: AircraftState,
    pub blue: AircraftState,
    pub step: u32,
}

impl CombatState {
    pub fn craft(&self, side: Side) -> &AircraftState {
        match side {
            Side::Red => &self.red,
            Side::Blue => &self.blue,
        }
    }

    /// Same engagement with the colors exchanged.
    pub fn swapped(&self) -> CombatState {
        CombatState {
            red: self.blue,
            blue: self.red,
            step: self.step,
        }
    }

    pub fn satisfies_invariants(&self, cfg: &DynamicsConfig) -> bool {
        self.red.satisfies_invariants(cfg) && self.blue.satisfies_invariants(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeGeometry {
    pub aa: f64,
    pub ata: f64,
    pub range: f64,
    /// Own minus opponent airspeed, m/s.
    pub dv: f64,
    /// Own minus opponent altitude, m.
    pub dh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Range at which the distance-angle reward peaks, m.
    pub r_d: f64,
    /// Range decay constant, m.
    pub k: f64,
    pub v_scale: f64,
    pub h_scale: f64,
    /// Dominated area bounds, radians (strict).
    pub ata_max: f64,
    pub aa_max: f64,
    /// Weights of the speed, height and distance-angle terms.
    pub weights: [f64; 3],
    /// Optional range gate on the dominated area, m. 0 disables it.
    pub max_win_range: f64,
    /// Added to the backup of a successor that ends the engagement: `+bonus`
    /// for a win, `-bonus` for a loss, nothing for mutual domination.
    pub terminal_bonus: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            r_d: 500.0,
            k: 200.0,
            v_scale: 100.0,
            h_scale: 1000.0,
            ata_max: 1.1,
            aa_max: 0.6,
            weights: [1.0 / 3.0; 3],
            max_win_range: 0.0,
            terminal_bonus: 0.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        let named = [
            ("r_d", self.r_d),
            ("k", self.k),
            ("v_scale", self.v_scale),
            ("h_scale", self.h_scale),
            ("ata_max", self.ata_max),
            ("aa_max", self.aa_max),
        ];
        for (key, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("reward.{key} must be positive, got {value}"));
            }
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!(
                "reward.weights must be finite and non-negative, got {:?}",
                self.weights
            ));
        }
        if !(self.max_win_range.is_finite() && self.max_win_range >= 0.0) {
            return Err(format!(
                "reward.max_win_range must be >= 0, got {}",
                self.max_win_range
            ));
        }
        if !self.terminal_bonus.is_finite() {
            return Err(format!(
                "reward.terminal_bonus must be finite, got {}",
                self.terminal_bonus
            ));
        }
        Ok(())
    }
}

/// Raw value features `[aa, ata, dz, dv, range]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; 5]);

impl FeatureVector {
    pub const LEN: usize = 5;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn unit_dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0)
}

pub fn relative_geometry(
    cs: &CombatState,
    perspective: Side,
) -> Result<RelativeGeometry, GeometryError> {
    let me = cs.craft(perspective);
    let other = cs.craft(perspective.opponent());
    let d = [me.x - other.x, me.y - other.y, me.z - other.z];
    let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if range.is_nan() || range < MIN_RANGE {
        return Err(GeometryError::Coincident { range });
    }
    let los = [d[0] / range, d[1] / range, d[2] / range];
    Ok(RelativeGeometry {
        aa: PI - unit_dot(other.heading_unit(), los).acos(),
        ata: PI - unit_dot(me.heading_unit(), los).acos(),
        range,
        dv: me.v - other.v,
        dh: me.z - other.z,
    })
}

pub fn distance_angle_reward(geom: &RelativeGeometry, cfg: &RewardConfig) -> f64 {
    let angle = ((1.0 - geom.aa.abs() / PI) + (1.0 - geom.ata.abs() / PI)) / 2.0;
    angle * (-(geom.range - cfg.r_d).abs() / (cfg.k * PI)).exp()
}

/// Speed and height advantage terms, each linearly scaled and clamped to [-1, 1].
pub fn scaled_component_rewards(geom: &RelativeGeometry, cfg: &RewardConfig) -> (f64, f64) {
    (
        (geom.dv / cfg.v_scale).clamp(-1.0, 1.0),
        (geom.dh / cfg.h_scale).clamp(-1.0, 1.0),
    )
}

pub fn reward_from_geometry(geom: &RelativeGeometry, cfg: &RewardConfig) -> f64 {
    let (r1, r2) = scaled_component_rewards(geom, cfg);
    let r3 = distance_angle_reward(geom, cfg);
    let [w1, w2, w3] = cfg.weights;
    w1 * r1 + w2 * r2 + w3 * r3
}

pub fn total_reward(
    cs: &CombatState,
    perspective: Side,
    cfg: &RewardConfig,
) -> Result<f64, GeometryError> {
    Ok(reward_from_geometry(&relative_geometry(cs, perspective)?, cfg))
}

pub fn features(cs: &CombatState, perspective: Side) -> Result<FeatureVector, GeometryError> {
    let g = relative_geometry(cs, perspective)?;
    Ok(FeatureVector([g.aa, g.ata, g.dh, g.dv, g.range]))
}

fn geometry_dominates(g: &RelativeGeometry, cfg: &RewardConfig) -> bool {
    let in_range = cfg.max_win_range <= 0.0 || g.range < cfg.max_win_range;
    g.ata.abs() < cfg.ata_max && g.aa.abs() < cfg.aa_max && in_range
}

/// True when `winner` holds the opponent inside its dominated area.
pub fn is_dominated(
    cs: &CombatState,
    winner: Side,
    cfg: &RewardConfig,
) -> Result<bool, GeometryError> {
    Ok(geometry_dominates(&relative_geometry(cs, winner)?, cfg))
}

pub fn terminal_status(
    cs: &CombatState,
    max_steps: u32,
    cfg: &RewardConfig,
) -> Result<Outcome, GeometryError> {
    let red = is_dominated(cs, Side::Red, cfg)?;
    let blue = is_dominated(cs, Side::Blue, cfg)?;
    Ok(match (red, blue) {
        (true, true) => Outcome::Draw,
        (true, false) => Outcome::RedWin,
        (false, true) => Outcome::BlueWin,
        (false, false) if cs.step >= max_steps => Outcome::Draw,
        (false, false) => Outcome::Ongoing,
    })
}
