//! LSQR (Paige & Saunders) for `min ‖A x - b‖` with a matrix-free `A`.
//!
//! Damped problems are expressed by stacking, see [`Damped`](super::Damped).
//! Starting from `x = 0`, LSQR returns the minimum-norm least-squares
//! solution when `A` is rank deficient.

use super::{axpy, check_finite, norm, scale, LinearOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b - A x‖` at the returned `x`.
    pub residual_norm: f64,
    /// `‖Aᵀ (b - A x)‖` at the returned `x`.
    pub normal_residual_norm: f64,
    /// Set when `residual_norm ≤ tol·(‖b‖ + ‖A‖·‖x‖)` (consistent systems)
    /// or `normal_residual_norm ≤ tol·‖A‖·residual_norm` (least-squares
    /// optimality), with `‖A‖` the Frobenius estimate from the
    /// bidiagonalisation.
    pub converged: bool,
    /// Residual estimate after each iteration, starting with `‖b‖`.
    pub residual_history: Vec<f64>,
}

/// Solves `min ‖A x - b‖`. `max_iter = 0` selects `4 · ncols`.
pub fn lsqr(
    a: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, operator has {m} rows",
            b.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    check_finite(b, "least-squares rhs")?;
    let max_iter = if max_iter == 0 { 4 * n.max(1) } else { max_iter };

    let mut x = vec![0.0; n];
    let mut u = b.to_vec();
    let bnorm = norm(&u);
    let mut beta = bnorm;
    if beta > 0.0 {
        scale(1.0 / beta, &mut u);
    }
    let mut v = vec![0.0; n];
    a.apply_transpose(&u, &mut v);
    let mut alpha = norm(&v);
    if alpha > 0.0 {
        scale(1.0 / alpha, &mut v);
    }
    let atb_norm = alpha * beta;
    let mut history = vec![bnorm];

    if atb_norm == 0.0 {
        // b = 0 or b ⟂ range(A): x = 0 is the minimum-norm solution.
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual_norm: bnorm,
                normal_residual_norm: 0.0,
                converged: true,
                residual_history: history,
            },
        ));
    }

    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut tmp_m = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut true_res = (bnorm, atb_norm);
    let mut anorm_sq = 0.0;
    let stop = |res: (f64, f64), anorm: f64, x: &[f64]| {
        res.0 <= tol * (bnorm + anorm * norm(x)) || res.1 <= tol * anorm * res.0
    };

    while iterations < max_iter {
        iterations += 1;

        // Golub-Kahan bidiagonalisation step.
        a.apply(&v, &mut tmp_m);
        for (ui, ti) in u.iter_mut().zip(&tmp_m) {
            *ui = ti - alpha * *ui;
        }
        beta = norm(&u);
        anorm_sq += alpha * alpha + beta * beta;
        if beta > 0.0 {
            scale(1.0 / beta, &mut u);
            a.apply_transpose(&u, &mut tmp_n);
            for (vi, ti) in v.iter_mut().zip(&tmp_n) {
                *vi = ti - beta * *vi;
            }
            alpha = norm(&v);
            if alpha > 0.0 {
                scale(1.0 / alpha, &mut v);
            }
        }

        // Plane rotation eliminating the subdiagonal beta.
        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        axpy(phi / rho, &w, &mut x);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = vi - (theta / rho) * *wi;
        }

        let rnorm_est = phibar;
        let arnorm_est = phibar * alpha * c.abs();
        history.push(rnorm_est);
        let anorm = anorm_sq.sqrt();

        let exhausted = alpha == 0.0 || beta == 0.0;
        if exhausted || stop((rnorm_est, arnorm_est), anorm, &x) {
            true_res = true_residuals(a, b, &x);
            if stop(true_res, anorm, &x) {
                converged = true;
                break;
            }
            if exhausted {
                break;
            }
        }
    }
    if !converged {
        true_res = true_residuals(a, b, &x);
        converged = stop(true_res, anorm_sq.sqrt(), &x);
    }

    Ok((
        x,
        SolveReport {
            iterations,
            residual_norm: true_res.0,
            normal_residual_norm: true_res.1,
            converged,
            residual_history: history,
        },
    ))
}

fn true_residuals(a: &dyn LinearOperator, b: &[f64], x: &[f64]) -> (f64, f64) {
    let mut r = vec![0.0; a.nrows()];
    a.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut atr = vec![0.0; a.ncols()];
    a.apply_transpose(&r, &mut atr);
    (norm(&r), norm(&atr))
}
