use nalgebra::DMatrix;

/// Result of a Householder QR with greedy column pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotedQr {
    /// Column indices in pivot order; always a full permutation.
    pub permutation: Vec<usize>,
    /// `|R_kk|` for each elimination step (length `min(rows, cols)`).
    pub r_diag: Vec<f64>,
}

/// Column-pivoted QR: at every step the remaining column with the largest
/// residual norm is eliminated next.
pub fn pivoted_qr(m: &DMatrix<f64>) -> PivotedQr {
    pivoted_qr_with_prefix(m, &[])
}

/// Like [`pivoted_qr`], but the first pivots are forced to `forced` (in
/// order) before greedy pivoting takes over.
pub fn pivoted_qr_with_prefix(m: &DMatrix<f64>, forced: &[usize]) -> PivotedQr {
    let (rows, cols) = m.shape();
    let steps = rows.min(cols);
    assert!(forced.len() <= steps, "more forced pivots than elimination steps");
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut r_diag = Vec::with_capacity(steps);

    for k in 0..steps {
        let pick = if k < forced.len() {
            perm[k..]
                .iter()
                .position(|&c| c == forced[k])
                .map(|p| p + k)
                .expect("forced pivot must be a distinct valid column")
        } else {
            let mut best = k;
            let mut best_norm = -1.0;
            for p in k..cols {
                let nrm = residual_norm_sq(&a, p, k);
                if nrm > best_norm || (nrm == best_norm && perm[p] < perm[best]) {
                    best = p;
                    best_norm = nrm;
                }
            }
            best
        };
        if pick != k {
            a.swap_columns(k, pick);
            perm.swap(k, pick);
        }
        r_diag.push(householder_step(&mut a, k));
    }
    let mut tail = perm.split_off(steps);
    tail.sort_unstable();
    perm.extend(tail);
    PivotedQr {
        permutation: perm,
        r_diag,
    }
}

fn residual_norm_sq(a: &DMatrix<f64>, col: usize, from: usize) -> f64 {
    a.column(col).rows_range(from..).norm_squared()
}

/// Reflects column `k` onto `e_k` over rows `k..` and applies the same
/// reflection to columns `k+1..`. Returns `|R_kk|`.
fn householder_step(a: &mut DMatrix<f64>, k: usize) -> f64 {
    let rows = a.nrows();
    let x: Vec<f64> = a.column(k).rows_range(k..).iter().copied().collect();
    let xnorm = crate::solvers::norm(&x);
    if xnorm == 0.0 {
        return 0.0;
    }
    let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
    let mut v = x;
    v[0] -= alpha;
    let vnorm = crate::solvers::norm(&v);
    v.iter_mut().for_each(|e| *e /= vnorm);
    for j in k..a.ncols() {
        let mut s = 0.0;
        for (i, vi) in v.iter().enumerate() {
            s += vi * a[(k + i, j)];
        }
        for (i, vi) in v.iter().enumerate() {
            a[(k + i, j)] -= 2.0 * s * vi;
        }
    }
    for i in (k + 1)..rows {
        a[(i, k)] = 0.0;
    }
    xnorm
}

/// Orthonormal basis of the orthogonal complement of the column space of
/// `q1`, whose columns must be orthonormal. Returns an `n x (n - k)` matrix.
pub fn orthogonal_complement(q1: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = q1.shape();
    assert!(k <= n);
    // Householder vectors of q1 = H_1 ⋯ H_k R.
    let mut a = q1.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let x: Vec<f64> = a.column(j).rows_range(j..).iter().copied().collect();
        let xnorm = crate::solvers::norm(&x);
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = crate::solvers::norm(&v);
        if vnorm > 0.0 {
            v.iter_mut().for_each(|e| *e /= vnorm);
            for c in j..k {
                let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * a[(j + i, c)]).sum();
                for (i, vi) in v.iter().enumerate() {
                    a[(j + i, c)] -= 2.0 * s * vi;
                }
            }
        }
        reflectors.push(v);
    }
    let mut out = DMatrix::zeros(n, n - k);
    let mut e = vec![0.0; n];
    for (col, j) in (k..n).enumerate() {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        for (r, v) in reflectors.iter().enumerate().rev() {
            let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * e[r + i]).sum();
            if s != 0.0 {
                for (i, vi) in v.iter().enumerate() {
                    e[r + i] -= 2.0 * s * vi;
                }
            }
        }
        out.column_mut(col).copy_from_slice(&e);
    }
    out
}
