//! One-on-one 3-D air combat simulation and a fitted value iteration
//! trainer for a discrete maneuvering policy.
//!
//! - [`dynamics`]: point-mass kinematics and the RK4 stepper.
//! - [`geometry`]: aspect / antenna-train angles, reward shaping, features.
//! - [`learner`]: value model, ridge fit, Bellman backups, greedy policy.
//! - [`engine`]: initial states, opponent policies, episodes, evaluation.
//! - [`io`]: run configuration, model files, trajectory CSV and SVG plots.

pub mod dynamics;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod learner;

pub use error::{Error, Result};
