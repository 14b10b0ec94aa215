use super::{axpy, check_finite, dot, norm, LinearOperator, SolveReport};
use crate::error::{Error, Result};

/// Conjugate gradients for a symmetric positive (semi)definite `A x = b`.
/// `max_iter = 0` selects `4 · n`.
pub fn conjugate_gradient(
    a: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.ncols();
    if a.nrows() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "CG needs a square operator matching the rhs ({}x{} vs {})",
            a.nrows(),
            n,
            b.len()
        )));
    }
    check_finite(b, "CG rhs")?;
    let max_iter = if max_iter == 0 { 4 * n.max(1) } else { max_iter };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = norm(b);
    let mut history = vec![bnorm];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual_norm: 0.0,
                normal_residual_norm: 0.0,
                converged: true,
                residual_history: history,
            },
        ));
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    let mut hit_tol = false;
    while iterations < max_iter {
        iterations += 1;
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let step = rr / pap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        let rr_new = dot(&r, &r);
        history.push(rr_new.sqrt());
        if rr_new.sqrt() <= tol * bnorm {
            hit_tol = true;
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    // Report the true residual; the recurrence can drift from it.
    a.apply(&x, &mut ap);
    let res = norm(&b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
    Ok((
        x,
        SolveReport {
            iterations,
            residual_norm: res,
            normal_residual_norm: res,
            converged: hit_tol,
            residual_history: history,
        },
    ))
}
