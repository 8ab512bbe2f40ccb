//! Fitted value iteration: sampled Bellman backups followed by a ridge
//! least-squares fit of a linear value model, and greedy policy extraction.

mod combat;
mod iteration;
mod least_squares;
mod value_model;

pub use combat::{
    fit_value_iteration, greedy_action, greedy_maneuver, trajectory_sample, CombatEnv, CombatFit,
    OpponentModel, OpponentSpec, SampleSet, TrainingConfig, TrainingSetup,
};
pub use iteration::{
    action_values, argmax_first, bellman_targets, fit_value_iteration_with, greedy_action_index,
    FitOutcome, FitSettings, IterationDiagnostics, Mdp, TargetBatch, Transition,
};
pub use least_squares::{least_squares_fit, solve_ridge, FitReport, MAX_CONDITION};
pub use value_model::{
    combat_norms, evaluate, expand_combat_features, expand_features, Expansion, ValueModel,
};
