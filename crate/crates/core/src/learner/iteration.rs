//! Bellman backups over a sample set, greedy action selection and the
//! fitted value iteration loop. Everything here is generic over [`Mdp`] so the
//! same code path runs the combat environment and small tabular problems.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::least_squares::{least_squares_fit, FitReport};
use super::value_model::ValueModel;
use crate::error::{Error, Result};

/// Outcome of taking one action.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub next: S,
    pub reward: f64,
    /// `Some(bonus)` when `next` ends the episode; the backup then uses
    /// `reward + bonus` with no bootstrap.
    pub terminal: Option<f64>,
}

/// A deterministic decision process with a raw feature map.
pub trait Mdp: Sync {
    type State: Clone + Send + Sync;

    fn action_count(&self) -> usize;

    fn raw_features(&self, s: &Self::State) -> Result<Vec<f64>>;

    /// Successors of `s` for every action, in action order. `model` is the
    /// current value estimate, which model-driven opponents may consult.
    fn successors(&self, s: &Self::State, model: &ValueModel) -> Result<Vec<Transition<Self::State>>>;
}

/// Backup targets for a sample set. Samples whose successors could not be
/// computed are listed in `skipped` and carry no target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetBatch {
    /// Indices into the sample set that received a target.
    pub kept: Vec<usize>,
    pub targets: Vec<f64>,
    pub skipped: Vec<(usize, String)>,
}

fn backup_value<E: Mdp>(env: &E, t: &Transition<E::State>, model: &ValueModel) -> Result<f64> {
    match t.terminal {
        Some(bonus) => Ok(t.reward + bonus),
        None => {
            let v = model.value_of_raw(&env.raw_features(&t.next)?)?;
            Ok(t.reward + model.gamma * v)
        }
    }
}

fn max_backup<E: Mdp>(env: &E, s: &E::State, model: &ValueModel) -> Result<f64> {
    let succ = env.successors(s, model)?;
    let mut best = f64::NEG_INFINITY;
    for t in &succ {
        best = best.max(backup_value(env, t, model)?);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Format("backup produced a non-finite value".into()))
    }
}

/// `max_a [ r(s, a) + gamma * V(f(s, a)) ]` for every sample.
pub fn bellman_targets<E: Mdp>(env: &E, samples: &[E::State], model: &ValueModel) -> Result<TargetBatch> {
    model.weights()?;
    let results: Vec<Result<f64>> = samples
        .par_iter()
        .map(|s| max_backup(env, s, model))
        .collect();
    let mut batch = TargetBatch {
        kept: Vec::with_capacity(samples.len()),
        targets: Vec::with_capacity(samples.len()),
        skipped: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => {
                batch.kept.push(i);
                batch.targets.push(t);
            }
            Err(Error::Unfitted) => return Err(Error::Unfitted),
            Err(e) => batch.skipped.push((i, e.to_string())),
        }
    }
    Ok(batch)
}

/// One-step lookahead values `r + bonus + gamma * V(f(s, a))` for all actions.
pub fn action_values<E: Mdp>(env: &E, s: &E::State, model: &ValueModel) -> Result<Vec<f64>> {
    model.weights()?;
    env.successors(s, model)?
        .iter()
        .map(|t| {
            let v = model.value_of_raw(&env.raw_features(&t.next)?)?;
            Ok(t.reward + t.terminal.unwrap_or(0.0) + model.gamma * v)
        })
        .collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn greedy_action_index<E: Mdp>(env: &E, s: &E::State, model: &ValueModel) -> Result<usize> {
    Ok(argmax_first(&action_values(env, s, model)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub iterations: usize,
    pub ridge: f64,
    pub resample_each_iteration: bool,
}

/// Per-iteration diagnostics record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    /// Largest change of the value estimate over the fitted samples.
    pub max_delta_v: f64,
    pub rms_residual: f64,
    pub normal_residual: f64,
    pub condition: f64,
    pub samples: usize,
    pub skipped: usize,
    pub mean_target: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome<S> {
    pub model: ValueModel,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub samples: Vec<S>,
}

/// Fitted value iteration starting from `V = 0`.
///
/// `draw` produces the sample set; it receives `None` for the initial draw and
/// the current model when resampling between iterations. `on_iteration` sees
/// each diagnostics record as soon as it is available.
pub fn fit_value_iteration_with<E, D, F>(
    env: &E,
    prototype: &ValueModel,
    settings: &FitSettings,
    mut draw: D,
    mut on_iteration: F,
) -> Result<FitOutcome<E::State>>
where
    E: Mdp,
    D: FnMut(Option<&ValueModel>) -> Result<Vec<E::State>>,
    F: FnMut(&IterationDiagnostics),
{
    prototype.validate()?;
    if settings.iterations == 0 {
        return Err(Error::Config("iterations must be >= 1".into()));
    }
    let mut model = prototype.with_zero_weights();
    let mut samples = draw(None)?;
    let mut raw = samples
        .par_iter()
        .map(|s| env.raw_features(s))
        .collect::<Vec<Result<Vec<f64>>>>();
    let mut diagnostics = Vec::with_capacity(settings.iterations);

    for iteration in 0..settings.iterations {
        let start = Instant::now();
        if iteration > 0 && settings.resample_each_iteration {
            samples = draw(Some(&model))?;
            raw = samples.par_iter().map(|s| env.raw_features(s)).collect();
        }
        let batch = bellman_targets(env, &samples, &model)?;
        let mut fit_raw = Vec::with_capacity(batch.kept.len());
        let mut fit_targets = Vec::with_capacity(batch.kept.len());
        let mut skipped = batch.skipped.len();
        for (&i, &t) in batch.kept.iter().zip(&batch.targets) {
            match &raw[i] {
                Ok(r) => {
                    fit_raw.push(r.clone());
                    fit_targets.push(t);
                }
                Err(_) => skipped += 1,
            }
        }
        let (next, report): (ValueModel, FitReport) =
            least_squares_fit(&fit_raw, &fit_targets, prototype, settings.ridge)?;
        let mut max_delta_v = 0.0f64;
        for r in &fit_raw {
            let delta = next.value_of_raw(r)? - model.value_of_raw(r)?;
            max_delta_v = max_delta_v.max(delta.abs());
        }
        let mean_target = if fit_targets.is_empty() {
            0.0
        } else {
            fit_targets.iter().sum::<f64>() / fit_targets.len() as f64
        };
        let diag = IterationDiagnostics {
            iteration: iteration + 1,
            max_delta_v,
            rms_residual: report.rms_residual,
            normal_residual: report.normal_residual,
            condition: report.condition,
            samples: fit_targets.len(),
            skipped,
            mean_target,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        on_iteration(&diag);
        diagnostics.push(diag);
        model = next;
    }
    Ok(FitOutcome {
        model,
        diagnostics,
        samples,
    })
}
