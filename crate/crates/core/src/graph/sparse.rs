use nalgebra::DMatrix;

use crate::solvers::LinearOperator;

/// Sparse matrix stored as coordinate triplets sorted by `(row, col)`.
///
/// Duplicate coordinates are summed on construction and explicit zeros are
/// dropped, so `nnz` counts structurally distinct nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseOperator {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        for &(r, c, _) in &triplets {
            assert!(
                r < nrows && c < ncols,
                "triplet ({r}, {c}) outside {nrows}x{ncols}"
            );
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        Self {
            nrows,
            ncols,
            triplets: merged,
        }
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        )
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &SparseOperator) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "inner dimensions differ");
        let mut row_start = vec![0usize; rhs.nrows + 1];
        for &(r, _, _) in &rhs.triplets {
            row_start[r + 1] += 1;
        }
        for k in 0..rhs.nrows {
            row_start[k + 1] += row_start[k];
        }
        let mut out = Vec::new();
        for &(r, k, a) in &self.triplets {
            for &(_, c, b) in &rhs.triplets[row_start[k]..row_start[k + 1]] {
                out.push((r, c, a * b));
            }
        }
        Self::from_triplets(self.nrows, rhs.ncols, out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.triplets {
            d[(r, c)] += v;
        }
        d
    }

    /// Column `c` as `(row, value)` pairs.
    pub fn column(&self, c: usize) -> Vec<(usize, f64)> {
        self.triplets
            .iter()
            .filter(|t| t.1 == c)
            .map(|&(r, _, v)| (r, v))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.apply(x, &mut y);
        y
    }

    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        self.apply_transpose(y, &mut x);
        x
    }
}

impl LinearOperator for SparseOperator {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows);
        debug_assert_eq!(x.len(), self.ncols);
        x.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c, v) in &self.triplets {
            x[c] += v * y[r];
        }
    }
}
