//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerical code.

#![allow(dead_code)]

use aircombat_adp::dynamics::AircraftState;
use aircombat_adp::learner::{Mdp, Transition, ValueModel};
use aircombat_adp::Result;

pub const G: f64 = 9.81;

/// Plain-array state `[v, x, y, z, theta, psi]`.
pub type Vec6 = [f64; 6];

pub fn to_vec6(s: &AircraftState) -> Vec6 {
    [s.v, s.x, s.y, s.z, s.theta, s.psi]
}

/// Point-mass equations written out independently of the library.
pub fn deriv(s: &Vec6, nx: f64, nz: f64, bank: f64) -> Vec6 {
    let [v, _, _, _, th, psi] = *s;
    [
        G * (nx - th.sin()),
        v * th.cos() * psi.sin(),
        v * th.cos() * psi.cos(),
        v * th.sin(),
        (nz * bank.cos() - th.cos()) * G / v,
        G * nz * bank.sin() / (v * th.cos()),
    ]
}

fn axpy(a: &Vec6, h: f64, d: &Vec6) -> Vec6 {
    let mut out = *a;
    for i in 0..6 {
        out[i] += h * d[i];
    }
    out
}

/// Classical RK4 over `duration` with `n` equal steps.
pub fn rk4_reference(s: &Vec6, nx: f64, nz: f64, bank: f64, duration: f64, n: usize) -> Vec6 {
    let h = duration / n as f64;
    let mut y = *s;
    for _ in 0..n {
        let k1 = deriv(&y, nx, nz, bank);
        let k2 = deriv(&axpy(&y, h / 2.0, &k1), nx, nz, bank);
        let k3 = deriv(&axpy(&y, h / 2.0, &k2), nx, nz, bank);
        let k4 = deriv(&axpy(&y, h, &k3), nx, nz, bank);
        for i in 0..6 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Dense least squares through Gaussian elimination with partial pivoting
/// on the normal equations.
pub fn gauss_least_squares(rows: &[Vec<f64>], y: &[f64], ridge: f64) -> Vec<f64> {
    let d = rows[0].len();
    let mut a = vec![vec![0.0; d + 1]; d];
    for (r, t) in rows.iter().zip(y) {
        for i in 0..d {
            for j in 0..d {
                a[i][j] += r[i] * r[j];
            }
            a[i][d] += r[i] * t;
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += ridge;
    }
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let (head, tail) = a.split_at_mut(col + 1);
        let pivot = &head[col];
        for row in tail.iter_mut() {
            let f = row[col] / pivot[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
        }
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][d] - s) / a[i][i];
    }
    x
}

/// Deterministic finite MDP with one-hot state features.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub next: Vec<Vec<usize>>,
    pub reward: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn states(&self) -> usize {
        self.next.len()
    }

    pub fn actions(&self) -> usize {
        self.next[0].len()
    }

    /// `k` sweeps of exact value iteration from zero.
    pub fn value_iteration(&self, gamma: f64, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.states()];
        for _ in 0..k {
            v = (0..self.states())
                .map(|s| {
                    (0..self.actions())
                        .map(|a| self.reward[s][a] + gamma * v[self.next[s][a]])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
        }
        v
    }

    pub fn q(&self, v: &[f64], gamma: f64, s: usize) -> Vec<f64> {
        (0..self.actions())
            .map(|a| self.reward[s][a] + gamma * v[self.next[s][a]])
            .collect()
    }
}

impl Mdp for TabularMdp {
    type State = usize;

    fn action_count(&self) -> usize {
        self.actions()
    }

    fn raw_features(&self, s: &usize) -> Result<Vec<f64>> {
        let mut f = vec![0.0; self.states()];
        f[*s] = 1.0;
        Ok(f)
    }

    fn successors(&self, s: &usize, _: &ValueModel) -> Result<Vec<Transition<usize>>> {
        Ok((0..self.actions())
            .map(|a| Transition {
                next: self.next[*s][a],
                reward: self.reward[*s][a],
                terminal: None,
            })
            .collect())
    }
}

pub fn random_tabular<R: rand::Rng>(rng: &mut R, max_states: usize, max_actions: usize) -> TabularMdp {
    let n = rng.random_range(2..=max_states);
    let m = rng.random_range(2..=max_actions);
    TabularMdp {
        next: (0..n).map(|_| (0..m).map(|_| rng.random_range(0..n)).collect()).collect(),
        reward: (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
    }
}
