use nalgebra::DMatrix;

/// A matrix known only through its action and the action of its transpose.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = Aᵀ y`; `x` is overwritten.
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]);
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        (**self).apply_transpose(y, x)
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = self.column(j).iter().zip(y).map(|(a, b)| a * b).sum();
        }
    }
}

/// Expansion `Φ` from a subset of coordinates into the full space:
/// `(Φ x)[free[s]] = x[s]`, zero elsewhere.
#[derive(Debug, Clone)]
pub struct Expansion {
    dim: usize,
    free: Vec<usize>,
}

impl Expansion {
    pub fn new(dim: usize, free: Vec<usize>) -> Self {
        debug_assert!(free.iter().all(|&r| r < dim));
        Self { dim, free }
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }
}

impl LinearOperator for Expansion {
    fn nrows(&self) -> usize {
        self.dim
    }
    fn ncols(&self) -> usize {
        self.free.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (s, &r) in self.free.iter().enumerate() {
            y[r] = x[s];
        }
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        for (s, &r) in self.free.iter().enumerate() {
            x[s] = y[r];
        }
    }
}

/// `outer * inner`.
pub struct Composed<A, B> {
    outer: A,
    inner: B,
}

impl<A: LinearOperator, B: LinearOperator> Composed<A, B> {
    pub fn new(outer: A, inner: B) -> Self {
        assert_eq!(outer.ncols(), inner.nrows(), "composition dimensions");
        Self { outer, inner }
    }
}

impl<A: LinearOperator, B: LinearOperator> LinearOperator for Composed<A, B> {
    fn nrows(&self) -> usize {
        self.outer.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; self.inner.nrows()];
        self.inner.apply(x, &mut tmp);
        self.outer.apply(&tmp, y);
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        let mut tmp = vec![0.0; self.outer.ncols()];
        self.outer.apply_transpose(y, &mut tmp);
        self.inner.apply_transpose(&tmp, x);
    }
}

/// The stacked operator `[A; damp * I]`.
pub struct Damped<A> {
    op: A,
    damp: f64,
}

impl<A: LinearOperator> Damped<A> {
    pub fn new(op: A, damp: f64) -> Self {
        Self { op, damp }
    }
}

impl<A: LinearOperator> LinearOperator for Damped<A> {
    fn nrows(&self) -> usize {
        self.op.nrows() + self.op.ncols()
    }
    fn ncols(&self) -> usize {
        self.op.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (top, bottom) = y.split_at_mut(self.op.nrows());
        self.op.apply(x, top);
        for (b, xi) in bottom.iter_mut().zip(x) {
            *b = self.damp * xi;
        }
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        let (top, bottom) = y.split_at(self.op.nrows());
        self.op.apply_transpose(top, x);
        for (xi, b) in x.iter_mut().zip(bottom) {
            *xi += self.damp * b;
        }
    }
}

pub struct Transposed<A>(pub A);

impl<A: LinearOperator> LinearOperator for Transposed<A> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_transpose(x, y)
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        self.0.apply(y, x)
    }
}

/// Principal submatrix `A[idx, idx]` of a square operator.
pub struct Restricted<A> {
    op: A,
    idx: Vec<usize>,
}

impl<A: LinearOperator> Restricted<A> {
    pub fn new(op: A, idx: Vec<usize>) -> Self {
        assert_eq!(op.nrows(), op.ncols(), "restriction needs a square operator");
        Self { op, idx }
    }
}

impl<A: LinearOperator> LinearOperator for Restricted<A> {
    fn nrows(&self) -> usize {
        self.idx.len()
    }
    fn ncols(&self) -> usize {
        self.idx.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.op.ncols();
        let mut full = vec![0.0; n];
        for (s, &r) in self.idx.iter().enumerate() {
            full[r] = x[s];
        }
        let mut out = vec![0.0; n];
        self.op.apply(&full, &mut out);
        for (s, &r) in self.idx.iter().enumerate() {
            y[s] = out[r];
        }
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        let n = self.op.ncols();
        let mut full = vec![0.0; n];
        for (s, &r) in self.idx.iter().enumerate() {
            full[r] = y[s];
        }
        let mut out = vec![0.0; n];
        self.op.apply_transpose(&full, &mut out);
        for (s, &r) in self.idx.iter().enumerate() {
            x[s] = out[r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::dot;

    fn adjoint_gap(op: &dyn LinearOperator, x: &[f64], y: &[f64]) -> f64 {
        let mut ax = vec![0.0; op.nrows()];
        op.apply(x, &mut ax);
        let mut aty = vec![0.0; op.ncols()];
        op.apply_transpose(y, &mut aty);
        (dot(&ax, y) - dot(x, &aty)).abs()
    }

    #[test]
    fn compositions_are_adjoint() {
        let a = DMatrix::from_fn(4, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let phi = Expansion::new(5, vec![0, 2, 3]);
        let op = Damped::new(Composed::new(&a, &phi), 0.3);
        let x = [0.5, -1.0, 2.0];
        let y = [1.0, 2.0, -0.5, 0.25, 3.0, -1.0, 0.75];
        assert!(adjoint_gap(&op, &x, &y) < 1e-12);
        let t = Transposed(&a);
        assert!(adjoint_gap(&t, &[1.0, -1.0, 0.5, 2.0], &[1.0, 2.0, 3.0, 4.0, 5.0]) < 1e-12);
    }

    #[test]
    fn expansion_is_an_isometry_onto_its_image() {
        let phi = Expansion::new(4, vec![3, 1]);
        let mut y = vec![0.0; 4];
        phi.apply(&[2.0, 5.0], &mut y);
        assert_eq!(y, vec![0.0, 5.0, 0.0, 2.0]);
        let mut back = vec![0.0; 2];
        phi.apply_transpose(&y, &mut back);
        assert_eq!(back, vec![2.0, 5.0]);
    }
}
