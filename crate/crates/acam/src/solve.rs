//! Dense linear solves for the ridge systems.
//!
//! The Gram matrix of the clamped surrogate kernel is symmetric but not
//! necessarily positive definite, so the solver tries a Cholesky
//! factorization first and falls back to Gaussian elimination with partial
//! pivoting. Solutions are verified against a relative-residual bound.

use crate::error::{Error, Result};

/// Relative residual accepted for a ridge solve.
pub(crate) const RESIDUAL_TOL: f64 = 1e-8;

/// Solve `a x = b` for symmetric `a`, verifying the residual. `a` is given
/// in full storage and is not assumed positive definite.
pub(crate) fn solve_symmetric(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = cholesky_solve(a, b) {
        if relative_residual(a, &x, b) <= RESIDUAL_TOL {
            return Ok(x);
        }
    }
    let (x, condition) = pivoted_solve(a, b)?;
    if relative_residual(a, &x, b) <= RESIDUAL_TOL {
        Ok(x)
    } else {
        Err(Error::SingularSystem { condition })
    }
}

pub(crate) fn relative_residual(a: &[Vec<f64>], x: &[f64], b: &[f64]) -> f64 {
    let n = b.len();
    let mut rr = 0.0;
    for i in 0..n {
        let ax: f64 = (0..n).map(|j| a[i][j] * x[j]).sum();
        rr += (ax - b[i]).powi(2);
    }
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nb == 0.0 {
        rr.sqrt()
    } else {
        rr.sqrt() / nb
    }
}

/// Plain `L L^T` factorization; `None` when the matrix is not numerically
/// positive definite.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

/// Gaussian elimination with partial pivoting. Returns the solution and a
/// crude condition estimate (max/min pivot magnitude).
fn pivoted_solve(a: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        let pivot = m[pivot_row][col];
        if pivot.abs() <= scale * n as f64 * f64::EPSILON {
            let condition = if pivot == 0.0 {
                f64::INFINITY
            } else {
                scale / pivot.abs()
            };
            return Err(Error::SingularSystem { condition });
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        max_pivot = max_pivot.max(pivot.abs());
        min_pivot = min_pivot.min(pivot.abs());
        for row in col + 1..n {
            let f = m[row][col] / pivot;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in i + 1..n {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    Ok((x, max_pivot / min_pivot))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let b = vec![1.0, 2.0];
        let x = solve_symmetric(&a, &b).unwrap();
        // closed form: x = A^{-1} b with det 11
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn falls_back_for_indefinite_systems() {
        // symmetric but indefinite: eigenvalues of opposite sign
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let b = vec![3.0, -2.0];
        let x = solve_symmetric(&a, &b).unwrap();
        assert!((x[0] + 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reports_singular_systems_with_condition() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 2.0];
        match solve_symmetric(&a, &b) {
            Err(Error::SingularSystem { condition }) => assert!(condition > 1e10),
            other => panic!("expected singular system, got {other:?}"),
        }
    }
}
