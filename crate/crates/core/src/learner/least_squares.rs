//! Ridge least squares through the normal equations
//! `(Phi^T Phi + lambda I) w = Phi^T y`.

use nalgebra::{DMatrix, DVector};

use super::value_model::{expand_features, ValueModel};
use crate::error::{Error, Result};

/// Systems whose normal matrix exceeds this condition number are rejected
/// when no ridge term is applied.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Root mean square of `Phi w - y`.
    pub rms_residual: f64,
    /// `|A w - b| / |b|` for the regularized normal system.
    pub normal_residual: f64,
    /// Spectral condition number of `Phi^T Phi + lambda I`.
    pub condition: f64,
}

/// Solves the ridge normal equations for a design matrix given row by row.
pub fn solve_ridge(rows: &[Vec<f64>], targets: &[f64], ridge: f64) -> Result<(Vec<f64>, FitReport)> {
    if rows.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: targets.len(),
        });
    }
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 || rows.len() < dim {
        return Err(Error::Config(format!(
            "least squares needs at least {dim} samples, got {}",
            rows.len()
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::Config(format!("ridge must be >= 0, got {ridge}")));
    }

    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    for (row, &y) in rows.iter().zip(targets) {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        for i in 0..dim {
            b[i] += row[i] * y;
            for j in i..dim {
                a[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..dim {
        a[(i, i)] += ridge;
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }

    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, e| m.min(*e));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if ridge == 0.0 && (condition.is_nan() || condition > MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }

    let w = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a
            .clone()
            .lu()
            .solve(&b)
            .ok_or(Error::Singular { condition })?,
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { condition });
    }

    let b_norm = b.norm();
    let normal_residual = if b_norm > 0.0 {
        (&a * &w - &b).norm() / b_norm
    } else {
        (&a * &w - &b).norm()
    };
    let sq: f64 = rows
        .iter()
        .zip(targets)
        .map(|(row, y)| {
            let pred: f64 = row.iter().zip(w.iter()).map(|(x, c)| x * c).sum();
            (pred - y).powi(2)
        })
        .sum();
    let report = FitReport {
        rms_residual: (sq / rows.len() as f64).sqrt(),
        normal_residual,
        condition,
    };
    Ok((w.iter().copied().collect(), report))
}

/// Fits `prototype`'s basis to `targets` over the raw feature rows `raw`.
pub fn least_squares_fit(
    raw: &[Vec<f64>],
    targets: &[f64],
    prototype: &ValueModel,
    ridge: f64,
) -> Result<(ValueModel, FitReport)> {
    if raw.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: raw.len(),
            got: targets.len(),
        });
    }
    let rows = raw
        .iter()
        .map(|r| expand_features(r, prototype))
        .collect::<Result<Vec<_>>>()?;
    let (weights, report) = solve_ridge(&rows, targets, ridge)?;
    Ok((prototype.with_weights(weights)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RewardConfig;
    use crate::learner::Expansion;

    fn raw_model(d: usize) -> ValueModel {
        ValueModel::unfitted(Expansion::Raw, vec![1.0; d], 0.9, RewardConfig::default())
    }

    #[test]
    fn single_column_recovers_slope() {
        let raw: Vec<Vec<f64>> = (1..=10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = raw.iter().map(|r| 2.0 * r[0]).collect();
        let (m, report) = least_squares_fit(&raw, &y, &raw_model(1), 0.0).unwrap();
        assert!((m.weights().unwrap()[0] - 2.0).abs() < 1e-14);
        assert!(report.rms_residual < 1e-12);
    }

    #[test]
    fn exact_representability() {
        let raw: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin(), t.cos(), t * 0.1]
            })
            .collect();
        let y: Vec<f64> = raw.iter().map(|r| 1.5 * r[0] - 0.25 * r[1] + 3.0 * r[2]).collect();
        let (m, report) = least_squares_fit(&raw, &y, &raw_model(3), 0.0).unwrap();
        let w = m.weights().unwrap();
        let resid: f64 = raw
            .iter()
            .zip(&y)
            .map(|(r, t)| (r[0] * w[0] + r[1] * w[1] + r[2] * w[2] - t).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(resid < 1e-8, "residual {resid}");
        assert!(report.normal_residual < 1e-12);
    }

    #[test]
    fn collinear_columns_are_singular_without_ridge() {
        let raw: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let err = least_squares_fit(&raw, &y, &raw_model(2), 0.0).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
        assert!(least_squares_fit(&raw, &y, &raw_model(2), 1e-6).is_ok());
    }

    #[test]
    fn too_few_samples() {
        let raw = vec![vec![1.0, 2.0]];
        assert!(least_squares_fit(&raw, &[1.0], &raw_model(2), 0.0).is_err());
        assert!(least_squares_fit(&raw, &[1.0, 2.0], &raw_model(2), 0.0).is_err());
    }
}
