mod common;

use std::f64::consts::PI;

use aircombat_adp::dynamics::{wrap_angle, AircraftState, DynamicsConfig, Maneuver};
use aircombat_adp::engine::InitialStateDistribution;
use aircombat_adp::geometry::{features, CombatState, RewardConfig, Side};
use aircombat_adp::learner::{
    action_values, bellman_targets, evaluate, fit_value_iteration, fit_value_iteration_with,
    greedy_action, greedy_action_index, least_squares_fit, solve_ridge, CombatEnv, Expansion,
    FitSettings, OpponentModel, TrainingConfig, TrainingSetup, ValueModel,
};
use common::{gauss_least_squares, random_tabular};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_combat<R: Rng>(rng: &mut R) -> CombatState {
    let mut craft = || AircraftState {
        v: rng.random_range(80.0..380.0),
        x: rng.random_range(-4000.0..4000.0),
        y: rng.random_range(-4000.0..4000.0),
        z: rng.random_range(1000.0..6000.0),
        theta: rng.random_range(-1.2..1.2),
        psi: wrap_angle(rng.random_range(-PI..PI)),
        bank: 0.0,
    };
    CombatState {
        red: craft(),
        blue: craft(),
        step: 0,
    }
}

fn random_model<R: Rng>(rng: &mut R) -> ValueModel {
    let m = ValueModel::combat_zero(0.95, RewardConfig::default(), 3000.0);
    let w = (0..m.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
    m.with_weights(w).unwrap()
}

fn env() -> CombatEnv {
    CombatEnv {
        dynamics: DynamicsConfig::default(),
        reward: RewardConfig::default(),
        perspective: Side::Red,
        opponent: OpponentModel::Constant(Maneuver::Continued),
    }
}

#[test]
fn ridge_solution_matches_gaussian_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for ridge in [0.0, 1e-6, 0.5] {
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..21).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (w, report) = solve_ridge(&rows, &y, ridge).unwrap();
        let want = gauss_least_squares(&rows, &y, ridge);
        for (a, b) in w.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "ridge {ridge}: {a} vs {b}");
        }
        assert!(report.normal_residual < 1e-8);
    }
}

#[test]
fn linear_target_is_reproduced() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let proto = ValueModel::unfitted(
        Expansion::Linear,
        vec![PI, PI, 1000.0, 100.0, 3000.0],
        0.9,
        RewardConfig::default(),
    );
    let states: Vec<CombatState> = (0..300).map(|_| random_combat(&mut rng)).collect();
    let raw: Vec<Vec<f64>> = states
        .iter()
        .map(|s| features(s, Side::Red).unwrap().0.to_vec())
        .collect();
    let y: Vec<f64> = raw.iter().map(|r| 2.0 * r[4] / 3000.0).collect();
    let (m, _) = least_squares_fit(&raw, &y, &proto, 0.0).unwrap();
    for (s, t) in states.iter().zip(&y) {
        assert!((evaluate(&m, s, Side::Red).unwrap() - t).abs() < 1e-9);
    }
}

#[test]
fn zero_and_bias_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let zero = ValueModel::combat_zero(0.9, RewardConfig::default(), 3000.0);
    let mut w = vec![0.0; zero.dimension()];
    w[0] = 1.75;
    let bias = zero.with_weights(w).unwrap();
    for _ in 0..50 {
        let s = random_combat(&mut rng);
        assert_eq!(evaluate(&zero, &s, Side::Red).unwrap(), 0.0);
        assert_eq!(evaluate(&bias, &s, Side::Blue).unwrap(), 1.75);
    }
}

#[test]
fn fitted_iteration_matches_tabular_value_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let gamma = 0.9;
    for _ in 0..20 {
        let mdp = random_tabular(&mut rng, 20, 5);
        let n = mdp.states();
        let proto = ValueModel::unfitted(Expansion::Raw, vec![1.0; n], gamma, RewardConfig::default());
        let settings = FitSettings {
            iterations: 250,
            ridge: 0.0,
            resample_each_iteration: false,
        };
        let states: Vec<usize> = (0..n).collect();
        let out = fit_value_iteration_with(&mdp, &proto, &settings, |_| Ok(states.clone()), |_| {}).unwrap();
        let v = out.model.weights().unwrap();
        let exact = mdp.value_iteration(gamma, 2000);
        let same_sweeps = mdp.value_iteration(gamma, 250);
        for s in 0..n {
            assert!((v[s] - exact[s]).abs() < 1e-6);
            assert!((v[s] - same_sweeps[s]).abs() < 1e-9);
            let q = mdp.q(&exact, gamma, s);
            let mut sorted = q.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            if sorted[0] - sorted[1] > 1e-9 {
                let best = (0..q.len()).find(|&a| q[a] == sorted[0]).unwrap();
                assert_eq!(greedy_action_index(&mdp, &s, &out.model).unwrap(), best);
            }
        }
    }
}

#[test]
fn zero_discount_targets_are_best_immediate_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let e = env();
    let mut model = random_model(&mut rng);
    model.gamma = 0.0;
    let states: Vec<CombatState> = (0..100).map(|_| random_combat(&mut rng)).collect();
    let batch = bellman_targets(&e, &states, &model).unwrap();
    let zero = ValueModel::combat_zero(0.0, RewardConfig::default(), 3000.0);
    for (&i, t) in batch.kept.iter().zip(&batch.targets) {
        let q = action_values(&e, &states[i], &zero).unwrap();
        assert_eq!(*t, q.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_is_invariant_to_bias_shift(seed in any::<u64>(), shift in -100.0..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng);
        let mut w = model.weights().unwrap().to_vec();
        w[0] += shift;
        let shifted = model.with_weights(w).unwrap();
        let e = env();
        for _ in 0..8 {
            let s = random_combat(&mut rng);
            prop_assert_eq!(greedy_action(&model, &s, &e).unwrap(), greedy_action(&shifted, &s, &e).unwrap());
        }
    }
}

fn small_setup(seed: u64) -> TrainingSetup {
    TrainingSetup {
        dynamics: DynamicsConfig::default(),
        reward: RewardConfig::default(),
        init: InitialStateDistribution::default(),
        training: TrainingConfig {
            n_samples: 2000,
            iterations: 5,
            seed,
            ..Default::default()
        },
        max_steps: 200,
    }
}

#[test]
fn combat_training_is_deterministic() {
    let a = fit_value_iteration(&small_setup(3), |_| {}).unwrap();
    let b = fit_value_iteration(&small_setup(3), |_| {}).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.diagnostics.len(), 5);
    assert_eq!(a.model.weights().unwrap().len(), 21);
    for (x, y) in a.diagnostics.iter().zip(&b.diagnostics) {
        assert_eq!((x.max_delta_v, x.rms_residual), (y.max_delta_v, y.rms_residual));
        assert!(x.normal_residual < 1e-8);
    }
    let c = fit_value_iteration(&small_setup(4), |_| {}).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn singular_fit_without_ridge_is_reported() {
    let mut setup = small_setup(1);
    setup.training.ridge = 0.0;
    setup.training.range_scale = 1e-3;
    let err = fit_value_iteration(&setup, |_| {}).unwrap_err();
    assert!(matches!(err, aircombat_adp::Error::Singular { .. }), "{err}");
    setup.training.ridge = 1e-6;
    assert!(fit_value_iteration(&setup, |_| {}).is_ok());
}
