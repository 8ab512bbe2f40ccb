//! Point-mass aircraft kinematics.
//!
//! Each craft is a particle driven by a tangential overload `nx`, a normal
//! overload `nz` and a bank angle. Yaw is measured clockwise from north, so
//! the ground track is `(sin psi, cos psi)` in the `(east, north)` plane.
//! The bank angle is a control, not an integrated state: it acts
//! instantaneously and is stored on the state only as the last command.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("degenerate aircraft state: v = {v} m/s, theta = {theta} rad")]
    Degenerate { v: f64, theta: f64 },
}

/// Maneuver command triple `[nx, nz, bank]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Tangential overload, g units.
    pub nx: f64,
    /// Normal overload, g units.
    pub nz: f64,
    /// Roll angle, radians.
    pub bank: f64,
}

impl ControlInput {
    pub const fn new(nx: f64, nz: f64, bank: f64) -> Self {
        Self { nx, nz, bank }
    }

    /// True when the command lies inside the maneuver library envelope.
    pub fn within_envelope(&self) -> bool {
        (-2.0..=2.0).contains(&self.nx)
            && (-5.0..=5.0).contains(&self.nz)
            && (-PI..=PI).contains(&self.bank)
    }
}

/// The seven-entry maneuver library. Declaration order is the action index
/// order used everywhere (ties in greedy selection go to the lowest index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    Continued,
    Acceleration,
    Deceleration,
    TurnLeft,
    TurnRight,
    PullUp,
    PushDown,
}

impl Maneuver {
    pub const COUNT: usize = 7;

    pub const ALL: [Maneuver; Maneuver::COUNT] = [
        Maneuver::Continued,
        Maneuver::Acceleration,
        Maneuver::Deceleration,
        Maneuver::TurnLeft,
        Maneuver::TurnRight,
        Maneuver::PullUp,
        Maneuver::PushDown,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Maneuver> {
        Self::ALL.get(index).copied()
    }

    /// Control triple exactly as listed in the maneuver library table.
    pub fn controls(self) -> ControlInput {
        match self {
            Maneuver::Continued => ControlInput::new(0.0, 1.0, 0.0),
            Maneuver::Acceleration => ControlInput::new(2.0, 1.0, 0.0),
            Maneuver::Deceleration => ControlInput::new(0.0, 1.0, 0.0),
            Maneuver::TurnLeft => ControlInput::new(0.0, 5.0, -PI / 3.0),
            Maneuver::TurnRight => ControlInput::new(0.0, 5.0, PI / 3.0),
            Maneuver::PullUp => ControlInput::new(0.0, 5.0, 0.0),
            Maneuver::PushDown => ControlInput::new(0.0, -5.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Maneuver::Continued => "continued",
            Maneuver::Acceleration => "acceleration",
            Maneuver::Deceleration => "deceleration",
            Maneuver::TurnLeft => "turn_left",
            Maneuver::TurnRight => "turn_right",
            Maneuver::PullUp => "pull_up",
            Maneuver::PushDown => "push_down",
        }
    }
}

impl fmt::Display for Maneuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Maneuver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Maneuver::ALL
            .iter()
            .copied()
            .find(|m| m.name() == key || m.name().replace('_', "") == key)
            .ok_or_else(|| format!("unknown maneuver `{s}`"))
    }
}

/// Kinematic state of one craft.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    /// Airspeed, m/s.
    pub v: f64,
    /// East, m.
    pub x: f64,
    /// North, m.
    pub y: f64,
    /// Altitude, m.
    pub z: f64,
    /// Pitch, radians.
    pub theta: f64,
    /// Yaw from north, radians in (-pi, pi].
    pub psi: f64,
    /// Last commanded roll, radians.
    pub bank: f64,
}

impl AircraftState {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Unit velocity direction in (east, north, up).
    pub fn heading_unit(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.psi.sin_cos();
        [ct * sp, ct * cp, st]
    }

    /// Altitude plus kinetic height, `z + v^2 / (2 g)`.
    pub fn specific_energy(&self, g: f64) -> f64 {
        self.z + self.v * self.v / (2.0 * g)
    }

    pub fn satisfies_invariants(&self, cfg: &DynamicsConfig) -> bool {
        let finite = [self.v, self.x, self.y, self.z, self.theta, self.psi, self.bank]
            .iter()
            .all(|c| c.is_finite());
        finite
            && self.v >= cfg.v_min
            && self.v <= cfg.v_max
            && self.theta.abs() <= cfg.theta_max
            && self.psi > -PI
            && self.psi <= PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
    /// Decision interval, s.
    pub dt: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Pitch clamp, radians.
    pub theta_max: f64,
    /// Tangential overload used by `Deceleration`. The library table lists 0.
    pub deceleration_nx: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            g: 9.81,
            dt: 0.25,
            v_min: 50.0,
            v_max: 400.0,
            theta_max: 85f64.to_radians(),
            deceleration_nx: 0.0,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(format!("dynamics.g must be positive, got {}", self.g));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(format!("dynamics.dt must be positive, got {}", self.dt));
        }
        if !(self.v_min > 0.0 && self.v_min < self.v_max && self.v_max.is_finite()) {
            return Err(format!(
                "dynamics.v_min/v_max must satisfy 0 < v_min < v_max, got {} / {}",
                self.v_min, self.v_max
            ));
        }
        if !(self.theta_max > 0.0 && self.theta_max < PI / 2.0) {
            return Err(format!(
                "dynamics.theta_max must lie in (0, pi/2), got {}",
                self.theta_max
            ));
        }
        if !(-2.0..=2.0).contains(&self.deceleration_nx) {
            return Err(format!(
                "dynamics.deceleration_nx must lie in [-2, 2], got {}",
                self.deceleration_nx
            ));
        }
        Ok(())
    }

    /// Control triple for `m`, honoring the `deceleration_nx` override.
    pub fn controls(&self, m: Maneuver) -> ControlInput {
        let mut u = m.controls();
        if m == Maneuver::Deceleration {
            u.nx = self.deceleration_nx;
        }
        u
    }
}

/// Time derivative of the integrated part of an [`AircraftState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub v_dot: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
    pub x_dot: f64,
    pub y_dot: f64,
    pub z_dot: f64,
}

pub fn maneuver_controls(m: Maneuver) -> ControlInput {
    m.controls()
}

pub fn state_derivative(
    s: &AircraftState,
    u: &ControlInput,
    cfg: &DynamicsConfig,
) -> Result<StateDerivative, DynamicsError> {
    let (st, ct) = s.theta.sin_cos();
    if s.v.is_nan() || s.v <= 0.0 || ct.abs() < 1e-9 {
        return Err(DynamicsError::Degenerate {
            v: s.v,
            theta: s.theta,
        });
    }
    let (sp, cp) = s.psi.sin_cos();
    let (sb, cb) = u.bank.sin_cos();
    let g = cfg.g;
    Ok(StateDerivative {
        v_dot: g * (u.nx - st),
        theta_dot: (u.nz * cb - ct) * g / s.v,
        psi_dot: g * u.nz * sb / (s.v * ct),
        x_dot: s.v * ct * sp,
        y_dot: s.v * ct * cp,
        z_dot: s.v * st,
    })
}

/// Wraps an angle into (-pi, pi]. Values already in range are returned as is.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Clamps airspeed and pitch and wraps yaw.
pub fn apply_guards(s: &AircraftState, cfg: &DynamicsConfig) -> AircraftState {
    AircraftState {
        v: s.v.clamp(cfg.v_min, cfg.v_max),
        theta: s.theta.clamp(-cfg.theta_max, cfg.theta_max),
        psi: wrap_angle(s.psi),
        ..*s
    }
}

fn advance(s: &AircraftState, d: &StateDerivative, h: f64) -> AircraftState {
    AircraftState {
        v: s.v + h * d.v_dot,
        x: s.x + h * d.x_dot,
        y: s.y + h * d.y_dot,
        z: s.z + h * d.z_dot,
        theta: s.theta + h * d.theta_dot,
        psi: s.psi + h * d.psi_dot,
        bank: s.bank,
    }
}

fn rk4_substep(
    s: &AircraftState,
    u: &ControlInput,
    cfg: &DynamicsConfig,
    h: f64,
) -> Result<AircraftState, DynamicsError> {
    let k1 = state_derivative(s, u, cfg)?;
    let k2 = state_derivative(&advance(s, &k1, h / 2.0), u, cfg)?;
    let k3 = state_derivative(&advance(s, &k2, h / 2.0), u, cfg)?;
    let k4 = state_derivative(&advance(s, &k3, h), u, cfg)?;
    let w = h / 6.0;
    let comb = |a: f64, b: f64, c: f64, d: f64| w * (a + 2.0 * b + 2.0 * c + d);
    Ok(AircraftState {
        v: s.v + comb(k1.v_dot, k2.v_dot, k3.v_dot, k4.v_dot),
        x: s.x + comb(k1.x_dot, k2.x_dot, k3.x_dot, k4.x_dot),
        y: s.y + comb(k1.y_dot, k2.y_dot, k3.y_dot, k4.y_dot),
        z: s.z + comb(k1.z_dot, k2.z_dot, k3.z_dot, k4.z_dot),
        theta: s.theta + comb(k1.theta_dot, k2.theta_dot, k3.theta_dot, k4.theta_dot),
        psi: s.psi + comb(k1.psi_dot, k2.psi_dot, k3.psi_dot, k4.psi_dot),
        bank: s.bank,
    })
}

/// Integrates one decision interval with `substeps` classical RK4 steps and
/// no state guards. The control is held constant over the interval.
pub fn integrate_unguarded(
    s: &AircraftState,
    u: &ControlInput,
    cfg: &DynamicsConfig,
    substeps: usize,
) -> Result<AircraftState, DynamicsError> {
    let n = substeps.max(1);
    let h = cfg.dt / n as f64;
    let mut cur = *s;
    for _ in 0..n {
        cur = rk4_substep(&cur, u, cfg, h)?;
    }
    cur.bank = u.bank;
    Ok(cur)
}

/// One decision step: a single RK4 step over `cfg.dt`, then state guards.
pub fn rk4_step(
    s: &AircraftState,
    u: &ControlInput,
    cfg: &DynamicsConfig,
) -> Result<AircraftState, DynamicsError> {
    rk4_step_substeps(s, u, cfg, 1)
}

pub fn rk4_step_substeps(
    s: &AircraftState,
    u: &ControlInput,
    cfg: &DynamicsConfig,
    substeps: usize,
) -> Result<AircraftState, DynamicsError> {
    Ok(apply_guards(&integrate_unguarded(s, u, cfg, substeps)?, cfg))
}
