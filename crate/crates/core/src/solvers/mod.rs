//! Numerical kernels: matrix-free operators, LSQR, conjugate gradients,
//! dense SVD, column-pivoted QR and a box-constrained QP solver.

mod box_qp;
mod cg;
mod lsqr;
mod operator;
mod qr;
mod svd;

pub use box_qp::{box_qp, BoxQpReport};
pub use cg::conjugate_gradient;
pub use lsqr::{lsqr, SolveReport};
pub use operator::{Composed, Damped, Expansion, LinearOperator, Restricted, Transposed};
pub use qr::{orthogonal_complement, pivoted_qr, pivoted_qr_with_prefix, PivotedQr};
pub use svd::{svd_dense, DenseSvd, SvdOrder};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    // Scaled to avoid overflow/underflow on extreme inputs.
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * a.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub(crate) fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> crate::Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite(what))
    }
}
