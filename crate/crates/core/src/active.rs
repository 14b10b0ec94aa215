//! Choosing which edges to measure.
//!
//! Two deterministic strategies are provided alongside uniform sampling:
//! a column-pivoted QR on the cycle-space basis, which targets recovery of
//! divergence-free flows, and recursive spectral bisection, which measures
//! the edges that cut the graph into clusters and suits gradient-like flows.

use std::fmt;
use std::str::FromStr;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::FlowNetwork;
use crate::solvers::{pivoted_qr, pivoted_qr_with_prefix, svd_dense, SvdOrder};
use crate::spectral::SpectralBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SelectionMethod {
    Random,
    Rrqr,
    RecursiveBisection,
}

impl SelectionMethod {
    pub const ALL: [SelectionMethod; 3] = [
        SelectionMethod::Random,
        SelectionMethod::Rrqr,
        SelectionMethod::RecursiveBisection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMethod::Random => "random",
            SelectionMethod::Rrqr => "rrqr",
            SelectionMethod::RecursiveBisection => "rb",
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(SelectionMethod::Random),
            "rrqr" => Ok(SelectionMethod::Rrqr),
            "rb" | "bisection" | "recursive-bisection" => Ok(SelectionMethod::RecursiveBisection),
            other => Err(Error::InvalidParameter(format!("unknown selection strategy '{other}'"))),
        }
    }
}

/// One split performed by recursive bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct Bisection {
    /// Vertices of the cluster that was split, ascending.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Edges with one endpoint on each side, ascending.
    pub cut_edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    /// Selected edge indices, distinct, in selection order.
    pub edges: Vec<usize>,
    /// Splits performed, for recursive bisection.
    pub bisections: Vec<Bisection>,
    /// Final cluster id of every vertex, for recursive bisection.
    pub clusters: Option<Vec<usize>>,
}

fn check_budget(budget: usize, m: usize) -> Result<()> {
    if budget > m {
        return Err(Error::InvalidParameter(format!(
            "cannot select {budget} edges from a graph with {m}"
        )));
    }
    Ok(())
}

/// `k` distinct edges drawn uniformly from `0..m`, ascending.
pub fn select_random(m: usize, budget: usize, seed: u64) -> Result<SelectionResult> {
    check_budget(budget, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = rand::seq::index::sample(&mut rng, m, budget).into_vec();
    edges.sort_unstable();
    Ok(SelectionResult {
        method: SelectionMethod::Random,
        edges,
        bisections: Vec::new(),
        clusters: None,
    })
}

/// Column-pivoted QR on `V_Cᵀ`. The first `min(budget, c)` pivots form the
/// selection. Larger budgets continue pivoting on the cut-space rows scaled
/// by `σ_min / σ`, keeping the cycle pivots as a fixed prefix. A tree has no
/// cycle space, in which case the selection falls back to uniform sampling
/// with `seed`.
pub fn select_rrqr(basis: &SpectralBasis, budget: usize, seed: u64) -> Result<SelectionResult> {
    let m = basis.m();
    check_budget(budget, m)?;
    let c = basis.n_cycle();
    if c == 0 {
        warn!("graph has no cycles; falling back to random edge selection");
        let mut r = select_random(m, budget, seed)?;
        r.method = SelectionMethod::Rrqr;
        return Ok(r);
    }
    let vc_t = basis.v_cycle().transpose();
    let first = pivoted_qr(&vc_t).permutation;
    if budget <= c {
        return Ok(rrqr_result(first[..budget].to_vec()));
    }

    let sigma = basis.sigma();
    let smin = sigma[c..].iter().copied().fold(f64::INFINITY, f64::min);
    let mut stacked = DMatrix::zeros(m, m);
    stacked.rows_mut(0, c).copy_from(&vc_t);
    for a in c..m {
        let d = smin / sigma[a];
        for r in 0..m {
            stacked[(a, r)] = d * basis.v()[(r, a)];
        }
    }
    let full = pivoted_qr_with_prefix(&stacked, &first[..c]).permutation;
    Ok(rrqr_result(full[..budget].to_vec()))
}

fn rrqr_result(edges: Vec<usize>) -> SelectionResult {
    SelectionResult {
        method: SelectionMethod::Rrqr,
        edges,
        bisections: Vec::new(),
        clusters: None,
    }
}

/// Recursive spectral bisection. The largest cluster (lowest id on ties)
/// is split by 2-means on its rows of the Laplacian embedding, and every
/// edge crossing the split is selected, until the budget is reached.
pub fn select_recursive_bisection(net: &FlowNetwork, budget: usize, embed_dim: usize) -> Result<SelectionResult> {
    let m = net.m();
    check_budget(budget, m)?;
    if embed_dim == 0 {
        return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
    }
    if !net.is_connected() {
        warn!(
            "recursive bisection on a graph with {} components",
            net.n_components()
        );
    }
    let n = net.n();
    let emb = laplacian_embedding(net, embed_dim);

    let mut clusters: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut assign = vec![0usize; n];
    let mut edges = Vec::with_capacity(budget);
    let mut bisections = Vec::new();

    while edges.len() < budget {
        let (id, size) = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.len()))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if size < 2 {
            break;
        }
        let members = std::mem::take(&mut clusters[id]);
        let (left, right) = two_means(&members, &emb);
        let new_id = clusters.len();
        for &v in &right {
            assign[v] = new_id;
        }
        let mut cut = Vec::new();
        for &v in &left {
            for &w in net.neighbors(v) {
                if assign[w] == new_id {
                    cut.push(net.edge_between(v, w).expect("neighbors share an edge").0);
                }
            }
        }
        cut.sort_unstable();
        edges.extend_from_slice(&cut);
        bisections.push(Bisection {
            left: left.clone(),
            right: right.clone(),
            cut_edges: cut,
        });
        clusters[id] = left;
        clusters.push(right);
    }
    edges.truncate(budget);
    Ok(SelectionResult {
        method: SelectionMethod::RecursiveBisection,
        edges,
        bisections,
        clusters: Some(assign),
    })
}

/// Rows of the eigenvectors of `L` for the smallest eigenvalues after the
/// zero eigenvalues (one per component). Each eigenvector is signed so its
/// largest-magnitude entry is positive.
fn laplacian_embedding(net: &FlowNetwork, dim: usize) -> DMatrix<f64> {
    let n = net.n();
    let l = net.laplacian().to_dense();
    let eig = SymmetricEigen::new(l);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let skip = net.n_components().min(n);
    let take = dim.min(n - skip);
    let mut emb = DMatrix::zeros(n, take.max(1));
    for (k, &j) in order[skip..skip + take].iter().enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        let max = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if let Some(p) = col.iter().position(|v| v.abs() >= max * (1.0 - 1e-9)) {
            if col[p] < 0.0 {
                col.iter_mut().for_each(|v| *v = -*v);
            }
        }
        emb.column_mut(k).copy_from_slice(&col);
    }
    emb
}

/// Lloyd's 2-means on the embedding rows of `members` (ascending), seeded
/// with the points of minimum and maximum first coordinate. Falls back to a
/// median split of the first coordinate when a side comes out empty.
fn two_means(members: &[usize], emb: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let d = emb.ncols();
    let point = |v: usize| -> Vec<f64> { emb.row(v).iter().copied().collect() };
    let first = |v: usize| emb[(v, 0)];
    let lo = *members
        .iter()
        .min_by(|&&a, &&b| first(a).partial_cmp(&first(b)).unwrap().then(a.cmp(&b)))
        .unwrap();
    let hi = *members
        .iter()
        .max_by(|&&a, &&b| first(a).partial_cmp(&first(b)).unwrap().then(b.cmp(&a)))
        .unwrap();
    let mut c0 = point(lo);
    let mut c1 = point(hi);
    let dist = |p: &[f64], c: &[f64]| p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();

    let mut side = vec![false; members.len()];
    let mut split_ok = c0 != c1;
    if split_ok {
        for it in 0..100 {
            let mut changed = false;
            for (s, &v) in members.iter().enumerate() {
                let p = point(v);
                let to_right = dist(&p, &c1) < dist(&p, &c0);
                if to_right != side[s] || it == 0 {
                    changed |= to_right != side[s];
                    side[s] = to_right;
                }
            }
            let n1 = side.iter().filter(|&&b| b).count();
            if n1 == 0 || n1 == members.len() {
                split_ok = false;
                break;
            }
            if !changed && it > 0 {
                break;
            }
            let mut s0 = vec![0.0; d];
            let mut s1 = vec![0.0; d];
            for (s, &v) in members.iter().enumerate() {
                let acc = if side[s] { &mut s1 } else { &mut s0 };
                for (a, x) in acc.iter_mut().zip(emb.row(v).iter()) {
                    *a += x;
                }
            }
            let n0 = members.len() - n1;
            c0 = s0.iter().map(|x| x / n0 as f64).collect();
            c1 = s1.iter().map(|x| x / n1 as f64).collect();
        }
    }
    if !split_ok {
        let mut sorted = members.to_vec();
        sorted.sort_by(|&a, &b| first(a).partial_cmp(&first(b)).unwrap().then(a.cmp(&b)));
        let half = sorted.len() / 2;
        let mut left = sorted[..half].to_vec();
        let mut right = sorted[half..].to_vec();
        left.sort_unstable();
        right.sort_unstable();
        return (left, right);
    }
    let left = members.iter().zip(&side).filter(|(_, &s)| !s).map(|(&v, _)| v).collect();
    let right = members.iter().zip(&side).filter(|(_, &s)| s).map(|(&v, _)| v).collect();
    (left, right)
}

/// `σ_min` of the `c x |S|` matrix formed by the selected rows of `V_C`,
/// i.e. of `V_C[S, :]ᵀ`. Zero when fewer rows than `c` are selected.
pub fn cycle_sigma_min(basis: &SpectralBasis, edges: &[usize]) -> f64 {
    let c = basis.n_cycle();
    if c == 0 {
        return 0.0;
    }
    if edges.len() < c {
        return 0.0;
    }
    let vc = basis.v_cycle();
    let sub = vc.select_rows(edges);
    svd_dense(&sub, SvdOrder::Descending)
        .singular_values()
        .last()
        .copied()
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rrqr_picks_one_edge_with_known_sigma() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 1)]).unwrap();
        let basis = SpectralBasis::compute(&net);
        let sel = select_rrqr(&basis, 1, 0).unwrap();
        assert_eq!(sel.edges.len(), 1);
        let s = cycle_sigma_min(&basis, &sel.edges);
        assert!((s - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rrqr_skips_bridges() {
        // Two triangles joined by the bridge (3,4): the bridge carries no
        // circulation and must not be chosen for the cycle space.
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 6), (6, 4)]).unwrap();
        let basis = SpectralBasis::compute(&net);
        assert_eq!(basis.n_cycle(), 2);
        let bridge = net.edge_between(2, 3).unwrap().0;
        let sel = select_rrqr(&basis, 2, 0).unwrap();
        assert!(!sel.edges.contains(&bridge));
        assert!(cycle_sigma_min(&basis, &sel.edges) > 0.1);
    }

    #[test]
    fn rrqr_extends_beyond_cycle_rank() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 1), (3, 4), (4, 5)]).unwrap();
        let basis = SpectralBasis::compute(&net);
        let sel = select_rrqr(&basis, net.m(), 0).unwrap();
        let mut all = sel.edges.clone();
        all.sort_unstable();
        assert_eq!(all, (0..net.m()).collect::<Vec<_>>());
        let sel3 = select_rrqr(&basis, 3, 0).unwrap();
        assert_eq!(sel3.edges[..1], sel.edges[..1]);
    }

    #[test]
    fn rrqr_on_tree_falls_back_to_random() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 4)]).unwrap();
        let basis = SpectralBasis::compute(&net);
        let a = select_rrqr(&basis, 2, 5).unwrap();
        let b = select_random(3, 2, 5).unwrap();
        assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn budget_larger_than_m_is_rejected() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3)]).unwrap();
        assert!(select_recursive_bisection(&net, 3, 2).is_err());
        assert!(select_random(2, 3, 0).is_err());
    }

    fn barbell(k: i64) -> FlowNetwork {
        let mut e = Vec::new();
        for off in [0, k] {
            for i in 1..=k {
                for j in (i + 1)..=k {
                    e.push((off + i, off + j));
                }
            }
        }
        e.push((k, k + 1));
        FlowNetwork::from_edge_list(&e).unwrap()
    }

    #[test]
    fn bisection_cuts_the_barbell_bridge_first() {
        let net = barbell(5);
        let bridge = net.edge_between(4, 5).unwrap().0;
        let sel = select_recursive_bisection(&net, 1, 2).unwrap();
        assert_eq!(sel.edges, vec![bridge]);
        let b = &sel.bisections[0];
        let mut sides = [b.left.clone(), b.right.clone()];
        sides.sort();
        assert_eq!(sides, [vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
    }

    #[test]
    fn bisection_path_middle_edge() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 4)]).unwrap();
        let sel = select_recursive_bisection(&net, 1, 2).unwrap();
        assert_eq!(sel.edges, vec![net.edge_between(1, 2).unwrap().0]);
    }

    #[test]
    fn bisection_selects_only_cut_edges_and_can_take_everything() {
        let net = barbell(4);
        let sel = select_recursive_bisection(&net, net.m(), 2).unwrap();
        let mut all = sel.edges.clone();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), net.m());
        for &e in &sel.edges {
            assert!(sel.bisections.iter().any(|b| b.cut_edges.contains(&e)));
        }
    }

    #[test]
    fn random_selection_is_seeded() {
        let a = select_random(100, 10, 3).unwrap();
        let b = select_random(100, 10, 3).unwrap();
        let c = select_random(100, 10, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.edges, c.edges);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in SelectionMethod::ALL {
            assert_eq!(s.name().parse::<SelectionMethod>().unwrap(), s);
        }
    }
}
