use nalgebra::DMatrix;

use super::orthogonal_complement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdOrder {
    #[default]
    Descending,
    /// Zero singular values (including the implied ones) come first.
    Ascending,
}

/// Full singular value decomposition `M = U Σ Vᵀ` with square orthogonal
/// `U` (rows x rows) and `V` (cols x cols).
///
/// Columns beyond the `min(rows, cols)` singular triples complete `U` or `V`
/// to an orthonormal basis and carry an implied singular value of zero.
/// `sigma_u[k]` / `sigma_v[k]` give the singular value attached to column
/// `k` of `U` / `V`. Each right singular vector is signed so that its
/// largest-magnitude entry (lowest index on ties) is positive; the paired
/// left vector is flipped with it.
#[derive(Debug, Clone)]
pub struct DenseSvd {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub sigma_u: Vec<f64>,
    pub sigma_v: Vec<f64>,
    /// `(u column, v column, σ)` for each of the `min(rows, cols)` triples,
    /// in the requested order.
    pub triples: Vec<(usize, usize, f64)>,
}

impl DenseSvd {
    pub fn singular_values(&self) -> Vec<f64> {
        self.triples.iter().map(|t| t.2).collect()
    }
}

fn sign_normalize(col: &mut [f64]) -> bool {
    let max = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return false;
    }
    let lead = col
        .iter()
        .position(|v| v.abs() >= max * (1.0 - 1e-9))
        .unwrap();
    if col[lead] < 0.0 {
        col.iter_mut().for_each(|v| *v = -*v);
        true
    } else {
        false
    }
}

/// Thin factors with `min(rows, cols)` columns each, from the symmetric
/// eigendecomposition of the smaller Gram matrix. The other side is
/// recovered as `M x / σ`; directions with `σ` at roundoff level are paired
/// with an orthonormal completion instead.
fn thin_factors(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let (rows, cols) = m.shape();
    let wide = rows <= cols;
    let (small, gram) = if wide {
        (m.transpose(), m * m.transpose())
    } else {
        (m.clone(), m.transpose() * m)
    };
    // `small` maps eigenvectors of `gram` to the other side.
    let eig = gram.symmetric_eigen();
    let basis = eig.eigenvectors;
    let k = basis.ncols();
    let other_dim = small.nrows();
    let images = &small * &basis;
    let sv: Vec<f64> = images.column_iter().map(|c| c.norm()).collect();
    let smax = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let tiny = ROUNDOFF_RANK_TOL * smax * (rows.max(cols) as f64);

    let resolved: Vec<usize> = (0..k).filter(|&j| smax > 0.0 && sv[j] > tiny).collect();
    let mut other = DMatrix::zeros(other_dim, k);
    for &j in &resolved {
        other.column_mut(j).copy_from(&(images.column(j) / sv[j]));
    }
    if resolved.len() < k {
        let mut known = DMatrix::zeros(other_dim, resolved.len());
        for (c, &j) in resolved.iter().enumerate() {
            known.column_mut(c).copy_from(&other.column(j));
        }
        let fill = orthogonal_complement(&known);
        let mut next = 0;
        for j in 0..k {
            if !resolved.contains(&j) {
                other.column_mut(j).copy_from(&fill.column(next));
                next += 1;
            }
        }
    }
    if wide {
        (basis, other, sv)
    } else {
        (other, basis, sv)
    }
}

const ROUNDOFF_RANK_TOL: f64 = 1e-13;

pub fn svd_dense(m: &DMatrix<f64>, order: SvdOrder) -> DenseSvd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return DenseSvd {
            u: DMatrix::identity(rows, rows),
            v: DMatrix::identity(cols, cols),
            sigma_u: vec![0.0; rows],
            sigma_v: vec![0.0; cols],
            triples: Vec::new(),
        };
    }

    let (u_thin, v_thin, sv) = thin_factors(m);

    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap().then(a.cmp(&b)));

    let mut u_pairs = DMatrix::zeros(rows, k);
    let mut v_pairs = DMatrix::zeros(cols, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in idx.iter().enumerate() {
        let mut vc: Vec<f64> = v_thin.column(src).iter().copied().collect();
        let mut uc: Vec<f64> = u_thin.column(src).iter().copied().collect();
        if sign_normalize(&mut vc) {
            uc.iter_mut().for_each(|x| *x = -*x);
        }
        v_pairs.column_mut(dst).copy_from_slice(&vc);
        u_pairs.column_mut(dst).copy_from_slice(&uc);
        sigma.push(sv[src]);
    }

    let complete = |pairs: &DMatrix<f64>| {
        let mut extra = orthogonal_complement(pairs);
        for mut c in extra.column_iter_mut() {
            let mut col: Vec<f64> = c.iter().copied().collect();
            sign_normalize(&mut col);
            c.copy_from_slice(&col);
        }
        extra
    };
    let u_extra = complete(&u_pairs);
    let v_extra = complete(&v_pairs);

    let assemble = |pairs: &DMatrix<f64>, extra: &DMatrix<f64>| -> (DMatrix<f64>, Vec<f64>) {
        let n = pairs.nrows();
        let mut out = DMatrix::zeros(n, n);
        let mut sig = vec![0.0; n];
        match order {
            SvdOrder::Descending => {
                for j in 0..k {
                    out.column_mut(j).copy_from(&pairs.column(j));
                    sig[j] = sigma[j];
                }
                for j in 0..extra.ncols() {
                    out.column_mut(k + j).copy_from(&extra.column(j));
                }
            }
            SvdOrder::Ascending => {
                let e = extra.ncols();
                for j in 0..e {
                    out.column_mut(j).copy_from(&extra.column(j));
                }
                for j in 0..k {
                    out.column_mut(e + j).copy_from(&pairs.column(k - 1 - j));
                    sig[e + j] = sigma[k - 1 - j];
                }
            }
        }
        (out, sig)
    };
    let (u, sigma_u) = assemble(&u_pairs, &u_extra);
    let (v, sigma_v) = assemble(&v_pairs, &v_extra);
    let triples = match order {
        SvdOrder::Descending => (0..k).map(|j| (j, j, sigma[j])).collect(),
        SvdOrder::Ascending => (0..k)
            .map(|j| (rows - k + j, cols - k + j, sigma[k - 1 - j]))
            .collect(),
    };
    DenseSvd {
        u,
        v,
        sigma_u,
        sigma_v,
        triples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(s: &DenseSvd, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut sig = DMatrix::zeros(rows, cols);
        for &(i, j, v) in &s.triples {
            sig[(i, j)] = v;
        }
        &s.u * sig * s.v.transpose()
    }

    #[test]
    fn factorization_holds_both_shapes_and_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(r, c) in &[(5, 8), (8, 5), (4, 4)] {
            let m = DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
            for order in [SvdOrder::Descending, SvdOrder::Ascending] {
                let s = svd_dense(&m, order);
                assert!((s.u.transpose() * &s.u - DMatrix::identity(r, r)).amax() < 1e-12);
                assert!((s.v.transpose() * &s.v - DMatrix::identity(c, c)).amax() < 1e-12);
                assert!((reconstruct(&s, r, c) - &m).amax() < 1e-12 * m.amax());
                let sv = s.singular_values();
                for w in sv.windows(2) {
                    match order {
                        SvdOrder::Descending => assert!(w[0] >= w[1]),
                        SvdOrder::Ascending => assert!(w[0] <= w[1]),
                    }
                }
            }
        }
    }

    #[test]
    fn random_incidence_matrices_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.random_range(5..=20);
            let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(0.3) && !pairs.contains(&(i, j)) {
                        pairs.push((i, j));
                    }
                }
            }
            let mut b = DMatrix::zeros(n, pairs.len());
            for (r, &(i, j)) in pairs.iter().enumerate() {
                b[(i, r)] = 1.0;
                b[(j, r)] = -1.0;
            }
            let s = svd_dense(&b, SvdOrder::Ascending);
            assert!((reconstruct(&s, n, pairs.len()) - &b).amax() < 1e-12);
            assert!((s.v.transpose() * &s.v - DMatrix::identity(pairs.len(), pairs.len())).amax() < 1e-12);
            let zeros = s.singular_values().iter().filter(|&&v| v < 1e-10).count();
            assert_eq!(zeros, 1);
        }
    }

    #[test]
    fn k3_incidence() {
        let b = DMatrix::from_row_slice(3, 3, &[1., 1., 0., -1., 0., 1., 0., -1., -1.]);
        let s = svd_dense(&b, SvdOrder::Descending);
        let sv = s.singular_values();
        assert!((sv[0] - 3f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 3f64.sqrt()).abs() < 1e-12);
        assert!(sv[2].abs() < 1e-12);
        let null: Vec<f64> = s.v.column(2).iter().copied().collect();
        let expect = 1.0 / 3f64.sqrt();
        assert!((null[0] - expect).abs() < 1e-12);
        assert!((null[1] + expect).abs() < 1e-12);
        assert!((null[2] - expect).abs() < 1e-12);
    }

    #[test]
    fn path_incidence_has_no_zero_singular_value() {
        let b = DMatrix::from_row_slice(3, 2, &[1., 0., -1., 1., 0., -1.]);
        let sv = svd_dense(&b, SvdOrder::Descending).singular_values();
        assert!((sv[0] - 3f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let s = svd_dense(&DMatrix::zeros(3, 4), SvdOrder::Ascending);
        assert!(s.singular_values().iter().all(|&v| v == 0.0));
        assert!(s.sigma_v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = DMatrix::from_fn(6, 9, |_, _| rng.random_range(-1.0..1.0));
        let s = svd_dense(&m, SvdOrder::Descending);
        for col in s.v.column_iter() {
            let (imax, _) = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            assert!(col[imax] > 0.0);
        }
    }
}
