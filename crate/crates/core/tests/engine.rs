use std::sync::Arc;

use aircombat_adp::dynamics::{AircraftState, Maneuver};
use aircombat_adp::engine::{
    evaluate_policies, run_batch, run_episode, run_episode_from, step_combat, InitialStateDistribution,
    Policy, SimConfig,
};
use aircombat_adp::geometry::{relative_geometry, total_reward, CombatState, Outcome, RewardConfig, Side};
use aircombat_adp::learner::ValueModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn level(x: f64, y: f64, psi_deg: f64, v: f64) -> AircraftState {
    AircraftState {
        v,
        x,
        y,
        z: 3000.0,
        theta: 0.0,
        psi: psi_deg.to_radians(),
        bank: 0.0,
    }
}

fn continued() -> Policy {
    Policy::Constant(Maneuver::Continued)
}

fn random_model(seed: u64) -> Arc<ValueModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ValueModel::combat_zero(0.95, RewardConfig::default(), 3000.0);
    let w = (0..m.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Arc::new(m.with_weights(w).unwrap())
}

#[test]
fn instant_win_records_one_row() {
    let cs = CombatState {
        red: level(0.0, 0.0, 0.0, 250.0),
        blue: level(0.0, 700.0, 0.0, 200.0),
        step: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rec = run_episode_from(&continued(), &continued(), cs, &SimConfig::default(), &mut rng, 0);
    assert_eq!(rec.outcome, Outcome::RedWin);
    assert_eq!(rec.rows.len(), 1);
    assert_eq!(rec.rows[0].maneuver_red, None);
}

#[test]
fn straight_flight_from_table_means_is_a_draw() {
    let exact = InitialStateDistribution {
        position_sigma: 0.0,
        angle_halfwidth_deg: 0.0,
        ..Default::default()
    };
    let rec = run_episode(&continued(), &continued(), &exact, &SimConfig::default(), 9);
    assert_eq!(rec.outcome, Outcome::Draw);
    assert_eq!(rec.rows.len(), 201);
    assert!(rec.error.is_none());
    // Both tracks are straight lines in the horizontal plane.
    for side in [0, 1] {
        let pick = |r: &aircombat_adp::engine::EpisodeRow| if side == 0 { r.red } else { r.blue };
        let a = pick(&rec.rows[0]);
        let b = pick(&rec.rows[200]);
        for row in &rec.rows {
            let p = pick(row);
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            assert!(cross.abs() < 1e-6 * ((b.x - a.x).hypot(b.y - a.y)).powi(2));
        }
    }
}

#[test]
fn episodes_are_deterministic_and_bounded() {
    let model = random_model(1);
    let red = Policy::EpsilonGreedy {
        model: Some(Arc::clone(&model)),
        epsilon: 0.3,
    };
    let blue = Policy::Greedy(model);
    let dist = InitialStateDistribution::default();
    let sim = SimConfig::default();
    let a = run_batch(&red, &blue, &dist, &sim, 12, 77);
    let b = run_batch(&red, &blue, &dist, &sim, 12, 77);
    assert_eq!(a, b);
    for rec in &a {
        assert!(rec.rows.len() <= 201);
        assert_ne!(rec.outcome, Outcome::Ongoing);
    }
}

#[test]
fn mirrored_start_gives_mirrored_episode() {
    let cs = CombatState {
        red: level(0.0, 0.0, 45.0, 230.0),
        blue: level(3000.0, 3000.0, -135.0, 230.0),
        step: 0,
    };
    let model = random_model(4);
    let sim = SimConfig::default();
    let cases = [
        (Policy::Constant(Maneuver::TurnLeft), Policy::Constant(Maneuver::PullUp)),
        (Policy::Greedy(Arc::clone(&model)), Policy::Greedy(Arc::clone(&model))),
    ];
    for (p, q) in cases {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = run_episode_from(&p, &q, cs, &sim, &mut rng, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = run_episode_from(&q, &p, cs.swapped(), &sim, &mut rng, 0);
        assert_eq!(a.rows.len(), b.rows.len());
        let flip = |o| match o {
            Outcome::RedWin => Outcome::BlueWin,
            Outcome::BlueWin => Outcome::RedWin,
            o => o,
        };
        assert_eq!(flip(a.outcome), b.outcome);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            for (u, w) in [(ra.red, rb.blue), (ra.blue, rb.red)] {
                for (x, y) in [(u.x, w.x), (u.y, w.y), (u.z, w.z), (u.v, w.v), (u.theta, w.theta), (u.psi, w.psi)] {
                    assert!((x - y).abs() < 1e-9);
                }
            }
            assert!((ra.reward_red - rb.reward_blue).abs() < 1e-9);
            assert_eq!(ra.maneuver_red, rb.maneuver_blue);
        }
    }
}

#[test]
fn record_rows_are_consistent() {
    let sim = SimConfig::default();
    let rec = run_episode(
        &Policy::UniformRandom,
        &Policy::UniformRandom,
        &InitialStateDistribution::default(),
        &sim,
        31,
    );
    for pair in rec.rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let next = step_combat(
            &a.combat_state(),
            a.maneuver_red.unwrap(),
            a.maneuver_blue.unwrap(),
            &sim.dynamics,
        )
        .unwrap();
        assert_eq!(next, b.combat_state());
        assert_eq!(b.step, a.step + 1);
    }
    for row in &rec.rows {
        let g = relative_geometry(&row.combat_state(), Side::Red).unwrap();
        assert_eq!((g.aa, g.ata, g.range), (row.aa_red, row.ata_red, row.range_m));
        assert_eq!(total_reward(&row.combat_state(), Side::Blue, &sim.reward).unwrap(), row.reward_blue);
    }
    assert!(rec.rows.last().unwrap().maneuver_red.is_none());
}

#[test]
fn summary_rates_are_consistent() {
    let dist = InitialStateDistribution::default();
    let sim = SimConfig::default();
    let s = evaluate_policies(&Policy::UniformRandom, &continued(), &dist, &sim, 25, 3).unwrap();
    assert!((s.red_win_rate + s.blue_win_rate + s.draw_rate - 1.0).abs() < 1e-12);
    assert_eq!(s.seeds.len(), 25);
    let one = evaluate_policies(&Policy::UniformRandom, &continued(), &dist, &sim, 1, 3).unwrap();
    let rec = run_episode(&Policy::UniformRandom, &continued(), &dist, &sim, one.seeds[0]);
    assert_eq!(one.mean_length, rec.steps() as f64);
    assert_eq!(one.mean_terminal_reward_red, rec.terminal_rewards().0);
    assert!(evaluate_policies(&Policy::UniformRandom, &continued(), &dist, &sim, 0, 3).is_err());
}
