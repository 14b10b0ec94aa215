//! Box-constrained convex quadratic programming:
//!
//! ```text
//! minimize ½ xᵀ Q x + cᵀ x   subject to  lower ≤ x ≤ upper
//! ```
//!
//! Accelerated projected gradient (FISTA with gradient restart, step `1/L`
//! from a power-iteration estimate of `‖Q‖`) followed by projected Newton
//! polishing: on the free coordinates the reduced system is solved with
//! conjugate gradients and the step is projected back onto the box.

use super::{check_finite, conjugate_gradient, dot, norm, LinearOperator, Restricted};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoxQpReport {
    pub iterations: usize,
    /// `‖x - clip(x - ∇f(x))‖` at the returned point.
    pub stationarity: f64,
    pub converged: bool,
}

fn clip(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((xi, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *xi = xi.clamp(*l, *u);
    }
}

struct Problem<'a> {
    q: &'a dyn LinearOperator,
    c: &'a [f64],
    lower: &'a [f64],
    upper: &'a [f64],
}

impl Problem<'_> {
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.q.apply(x, g);
        g.iter_mut().zip(self.c).for_each(|(gi, ci)| *gi += ci);
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let mut qx = vec![0.0; x.len()];
        self.q.apply(x, &mut qx);
        0.5 * dot(x, &qx) + dot(self.c, x)
    }

    fn stationarity(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut d = 0.0;
        for i in 0..x.len() {
            let p = (x[i] - g[i]).clamp(self.lower[i], self.upper[i]);
            d += (x[i] - p).powi(2);
        }
        d.sqrt()
    }

    fn converged(&self, x: &[f64], g: &[f64], tol: f64) -> (bool, f64) {
        let s = self.stationarity(x, g);
        (s <= tol * (1.0 + norm(x)), s)
    }
}

fn lipschitz_estimate(q: &dyn LinearOperator) -> f64 {
    let n = q.ncols();
    // Deterministic, non-degenerate start vector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let mut w = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..200 {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        q.apply(&v, &mut w);
        let next = norm(&w);
        std::mem::swap(&mut v, &mut w);
        if (next - est).abs() <= 1e-10 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

/// Minimises `½ xᵀQx + cᵀx` over `lower ≤ x ≤ upper`. `Q` must be symmetric
/// positive semidefinite. The returned point always lies inside the box.
/// `max_iter = 0` selects 200 000 gradient iterations.
pub fn box_qp(
    q: &dyn LinearOperator,
    c: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, BoxQpReport)> {
    let n = c.len();
    if q.nrows() != n || q.ncols() != n || lower.len() != n || upper.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "box QP: operator {}x{}, c {}, bounds {}/{}",
            q.nrows(),
            q.ncols(),
            n,
            lower.len(),
            upper.len()
        )));
    }
    check_finite(c, "QP linear term")?;
    check_finite(lower, "QP lower bound")?;
    check_finite(upper, "QP upper bound")?;
    let crossed: Vec<usize> = (0..n).filter(|&i| lower[i] > upper[i]).collect();
    if !crossed.is_empty() {
        return Err(Error::InfeasibleBox(crossed));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let max_iter = if max_iter == 0 { 200_000 } else { max_iter };
    let prob = Problem {
        q,
        c,
        lower,
        upper,
    };

    let lip = lipschitz_estimate(q) * 1.05;
    let mut x = vec![0.0; n];
    clip(&mut x, lower, upper);
    let mut g = vec![0.0; n];

    if lip == 0.0 {
        // Linear objective: each coordinate goes to the bound c points away from.
        for i in 0..n {
            if c[i] > 0.0 {
                x[i] = lower[i];
            } else if c[i] < 0.0 {
                x[i] = upper[i];
            }
        }
        prob.gradient(&x, &mut g);
        let (ok, s) = prob.converged(&x, &g, tol);
        return Ok((
            x,
            BoxQpReport {
                iterations: 0,
                stationarity: s,
                converged: ok,
            },
        ));
    }

    let mut iterations = 0;
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut x_new = vec![0.0; n];
    let check_every = 25;
    let polish_every = 500;

    loop {
        prob.gradient(&x, &mut g);
        let (ok, _) = prob.converged(&x, &g, tol);
        if ok || iterations >= max_iter {
            break;
        }
        if iterations > 0 && iterations % polish_every == 0 {
            if let Some(better) = polish(&prob, &x, tol) {
                x = better;
                y.copy_from_slice(&x);
                t = 1.0;
                continue;
            }
        }
        for _ in 0..check_every {
            iterations += 1;
            prob.gradient(&y, &mut g);
            for i in 0..n {
                x_new[i] = y[i] - g[i] / lip;
            }
            clip(&mut x_new, lower, upper);
            // Restart momentum when it points uphill.
            let uphill: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            let t_next = if uphill > 0.0 {
                1.0
            } else {
                0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
            };
            let momentum = if uphill > 0.0 { 0.0 } else { (t - 1.0) / t_next };
            for i in 0..n {
                y[i] = x_new[i] + momentum * (x_new[i] - x[i]);
            }
            clip(&mut y, lower, upper);
            std::mem::swap(&mut x, &mut x_new);
            t = t_next;
        }
    }

    if !prob.converged(&x, &g, tol).0 {
        if let Some(better) = polish(&prob, &x, tol) {
            x = better;
        }
    }
    clip(&mut x, lower, upper);
    prob.gradient(&x, &mut g);
    let (converged, stationarity) = prob.converged(&x, &g, tol);
    Ok((
        x,
        BoxQpReport {
            iterations,
            stationarity,
            converged,
        },
    ))
}

/// Projected Newton steps on the current free set. Returns an improved point
/// if the objective decreased.
fn polish(prob: &Problem, x0: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut improved = false;
    let mut f = prob.objective(&x);
    for _ in 0..20 {
        prob.gradient(&x, &mut g);
        if prob.converged(&x, &g, tol).0 {
            break;
        }
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lower = x[i] <= prob.lower[i] && g[i] > 0.0;
                let at_upper = x[i] >= prob.upper[i] && g[i] < 0.0;
                prob.lower[i] < prob.upper[i] && !at_lower && !at_upper
            })
            .collect();
        if free.is_empty() {
            break;
        }
        let rhs: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
        let reduced = Restricted::new(prob.q, free.clone());
        let Ok((d, _)) = conjugate_gradient(&reduced, &rhs, 1e-14, 10 * free.len()) else {
            break;
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = x.clone();
            for (s, &i) in free.iter().enumerate() {
                trial[i] += step * d[s];
            }
            clip(&mut trial, prob.lower, prob.upper);
            let ft = prob.objective(&trial);
            if ft < f {
                x = trial;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        improved = true;
    }
    improved.then_some(x)
}
