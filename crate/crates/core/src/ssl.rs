//! Semi-supervised inference of unmeasured edge flows.
//!
//! The main estimator fills in unlabeled edges by minimising
//! `‖B f‖² + λ² ‖f^U‖²` with the labeled entries held fixed, which favours
//! flows that are close to divergence free. Two baselines are provided for
//! comparison: zero fill and harmonic interpolation on the line graph.

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::graph::{EdgeFlow, FlowNetwork, VertexLabels};
use crate::solvers::{conjugate_gradient, lsqr, Composed, Damped, Expansion, LinearOperator, SolveReport};

/// Measured flows on a subset of edges.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    m: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl LabelSet {
    /// Indices must be distinct and below `m`; values must be finite.
    pub fn new(m: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "label values",
                expected: indices.len(),
                actual: values.len(),
            });
        }
        let mut seen = vec![false; m];
        for &r in &indices {
            if r >= m {
                return Err(Error::EdgeIndexOutOfRange { index: r, m });
            }
            if seen[r] {
                return Err(Error::DuplicateLabel(r));
            }
            seen[r] = true;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("label values"));
        }
        Ok(Self { m, indices, values })
    }

    /// Labels taken from a known flow at the given edges.
    pub fn from_flow(truth: &[f64], indices: Vec<usize>) -> Result<Self> {
        let m = truth.len();
        if let Some(&bad) = indices.iter().find(|&&r| r >= m) {
            return Err(Error::EdgeIndexOutOfRange { index: bad, m });
        }
        let values = indices.iter().map(|&r| truth[r]).collect();
        Self::new(m, indices, values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Unlabeled edge indices, ascending.
    pub fn unlabeled(&self) -> Vec<usize> {
        let mut labeled = vec![false; self.m];
        for &r in &self.indices {
            labeled[r] = true;
        }
        (0..self.m).filter(|&r| !labeled[r]).collect()
    }

    /// `f⁰`: the labels in place, zero elsewhere.
    pub fn zero_fill(&self) -> EdgeFlow {
        let mut f = EdgeFlow::zeros(self.m);
        for (&r, &v) in self.indices.iter().zip(&self.values) {
            f[r] = v;
        }
        f
    }

    /// The expansion `Φ` from unlabeled coordinates into edge space.
    pub fn expansion(&self) -> Expansion {
        Expansion::new(self.m, self.unlabeled())
    }

    fn check_network(&self, net: &FlowNetwork) -> Result<()> {
        if self.m != net.m() {
            return Err(Error::LengthMismatch {
                what: "label set edge count",
                expected: net.m(),
                actual: self.m,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SslConfig {
    /// Weight `λ` of the ridge term on unlabeled flows.
    pub lambda: f64,
    /// Relative LSQR stopping tolerance.
    pub tol: f64,
    /// LSQR iteration cap; 0 selects four times the number of unknowns.
    pub max_iter: usize,
}

impl Default for SslConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            tol: 1e-10,
            max_iter: 0,
        }
    }
}

impl SslConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Divergence-minimising flow completion. Labeled entries are copied
/// exactly into the result.
pub fn infer_divergence_free(net: &FlowNetwork, labels: &LabelSet, cfg: &SslConfig) -> Result<EdgeFlow> {
    infer_divergence_free_with_report(net, labels, cfg).map(|(f, _)| f)
}

pub fn infer_divergence_free_with_report(
    net: &FlowNetwork,
    labels: &LabelSet,
    cfg: &SslConfig,
) -> Result<(EdgeFlow, SolveReport)> {
    labels.check_network(net)?;
    cfg.validate()?;
    let f0 = labels.zero_fill();
    let phi = labels.expansion();
    let n_free = phi.ncols();
    let empty_report = SolveReport {
        iterations: 0,
        residual_norm: 0.0,
        normal_residual_norm: 0.0,
        converged: true,
        residual_history: Vec::new(),
    };
    if n_free == 0 {
        return Ok((f0, empty_report));
    }
    if labels.is_empty() {
        // Without labels the minimiser is the zero flow.
        return Ok((f0, empty_report));
    }

    let b = net.incidence_matrix();
    let div0 = b.mul_vec(&f0);
    let mut rhs = Vec::with_capacity(net.n() + n_free);
    rhs.extend(div0.iter().map(|v| -v));
    rhs.resize(net.n() + n_free, 0.0);

    let op = Damped::new(Composed::new(&b, &phi), cfg.lambda);
    let max_iter = if cfg.max_iter == 0 { 4 * n_free } else { cfg.max_iter };
    let (fu, report) = lsqr(&op, &rhs, cfg.tol, max_iter)?;
    if !report.converged {
        warn!(
            "LSQR stopped after {} iterations without meeting tolerance {:e}",
            report.iterations, cfg.tol
        );
    }
    debug!(
        "flow inference: {} unknowns, {} iterations, residual {:e}",
        n_free, report.iterations, report.residual_norm
    );
    let mut f = f0;
    for (s, &r) in phi.free().iter().enumerate() {
        f[r] = fu[s];
    }
    Ok((f, report))
}

/// `‖B f‖² + λ² ‖f^U‖²` for a completed flow.
pub fn divergence_objective(net: &FlowNetwork, labels: &LabelSet, f: &[f64], lambda: f64) -> Result<f64> {
    net.check_flow(f)?;
    let div = net.divergence(f)?;
    let ridge: f64 = labels.unlabeled().iter().map(|&r| f[r] * f[r]).sum();
    Ok(div.iter().map(|v| v * v).sum::<f64>() + lambda * lambda * ridge)
}

/// Harmonic interpolation of vertex labels: unlabeled vertices take the
/// values that minimise `yᵀ L y` with the labeled vertices fixed.
pub fn vertex_ssl_harmonic(net: &FlowNetwork, labeled: &[(usize, f64)]) -> Result<VertexLabels> {
    let n = net.n();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(v, y) in labeled {
        if v >= n {
            return Err(Error::InvalidVertex(v as i64));
        }
        if fixed[v].is_some() {
            return Err(Error::DuplicateLabel(v));
        }
        if !y.is_finite() {
            return Err(Error::NonFinite("vertex labels"));
        }
        fixed[v] = Some(y);
    }
    let mut has_label = vec![false; net.n_components()];
    for (v, y) in fixed.iter().enumerate() {
        if y.is_some() {
            has_label[net.components()[v]] = true;
        }
    }
    if let Some(component) = has_label.iter().position(|&h| !h) {
        return Err(Error::UnlabeledComponent { component });
    }

    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let mut out = VertexLabels::zeros(n);
    for (v, y) in fixed.iter().enumerate() {
        if let Some(y) = y {
            out[v] = *y;
        }
    }
    if free.is_empty() {
        return Ok(out);
    }
    let mut pos = vec![usize::MAX; n];
    for (s, &v) in free.iter().enumerate() {
        pos[v] = s;
    }
    let rhs: Vec<f64> = free
        .iter()
        .map(|&v| net.neighbors(v).iter().filter_map(|&w| fixed[w]).sum())
        .collect();
    let op = ReducedLaplacian { net, free: &free, pos: &pos };
    let (y, report) = conjugate_gradient(&op, &rhs, 1e-12, 10 * free.len().max(10))?;
    if !report.converged {
        warn!("harmonic interpolation: CG stopped after {} iterations", report.iterations);
    }
    for (s, &v) in free.iter().enumerate() {
        out[v] = y[s];
    }
    Ok(out)
}

/// `L_UU` restricted to the free vertices.
struct ReducedLaplacian<'a> {
    net: &'a FlowNetwork,
    free: &'a [usize],
    pos: &'a [usize],
}

impl LinearOperator for ReducedLaplacian<'_> {
    fn nrows(&self) -> usize {
        self.free.len()
    }
    fn ncols(&self) -> usize {
        self.free.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (s, &v) in self.free.iter().enumerate() {
            let mut acc = self.net.degree(v) as f64 * x[s];
            for &w in self.net.neighbors(v) {
                let p = self.pos[w];
                if p != usize::MAX {
                    acc -= x[p];
                }
            }
            y[s] = acc;
        }
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        self.apply(y, x)
    }
}

/// Labeled edges keep their values, every other edge gets zero.
pub fn baseline_zero_fill(net: &FlowNetwork, labels: &LabelSet) -> Result<EdgeFlow> {
    labels.check_network(net)?;
    Ok(labels.zero_fill())
}

/// Harmonic interpolation on the line graph, treating each edge flow as a
/// scalar vertex label. Components of the line graph without any label
/// are filled with zero.
pub fn baseline_line_graph(net: &FlowNetwork, labels: &LabelSet) -> Result<EdgeFlow> {
    labels.check_network(net)?;
    if labels.is_empty() {
        return Ok(labels.zero_fill());
    }
    let lg = net.line_graph();
    let labeled: Vec<(usize, f64)> = labels
        .indices()
        .iter()
        .copied()
        .zip(labels.values().iter().copied())
        .collect();
    let mut covered = vec![false; lg.n_components()];
    for &(r, _) in &labeled {
        covered[lg.components()[r]] = true;
    }
    if covered.iter().all(|&c| c) {
        return Ok(EdgeFlow::new(vertex_ssl_harmonic(&lg, &labeled)?.into_vec()));
    }
    // Anchor unlabeled components at zero on their first vertex.
    let mut anchored = labeled;
    let mut done = covered.clone();
    for v in 0..lg.n() {
        let c = lg.components()[v];
        if !done[c] {
            anchored.push((v, 0.0));
            done[c] = true;
        }
    }
    let mut out = vertex_ssl_harmonic(&lg, &anchored)?.into_vec();
    for (v, x) in out.iter_mut().enumerate() {
        if !covered[lg.components()[v]] {
            *x = 0.0;
        }
    }
    Ok(EdgeFlow::new(out))
}

/// Flow reconstruction methods compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    FlowSsl,
    ZeroFill,
    LineGraph,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FlowSsl, Method::ZeroFill, Method::LineGraph];

    pub fn name(self) -> &'static str {
        match self {
            Method::FlowSsl => "flowssl",
            Method::ZeroFill => "zerofill",
            Method::LineGraph => "linegraph",
        }
    }

    pub fn infer(self, net: &FlowNetwork, labels: &LabelSet, cfg: &SslConfig) -> Result<EdgeFlow> {
        match self {
            Method::FlowSsl => infer_divergence_free(net, labels, cfg),
            Method::ZeroFill => baseline_zero_fill(net, labels),
            Method::LineGraph => baseline_line_graph(net, labels),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flowssl" | "flow-ssl" | "flow_ssl" => Ok(Method::FlowSsl),
            "zerofill" | "zero-fill" | "zero_fill" | "zero" => Ok(Method::ZeroFill),
            "linegraph" | "line-graph" | "line_graph" => Ok(Method::LineGraph),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn k3() -> FlowNetwork {
        FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 1)]).unwrap()
    }

    #[test]
    fn triangle_recovers_circulation_from_one_label() {
        let net = k3();
        let labels = LabelSet::new(3, vec![0], vec![2.0]).unwrap();
        let f = infer_divergence_free(&net, &labels, &SslConfig::with_lambda(1e-8)).unwrap();
        assert_eq!(f[0], 2.0);
        assert!((f[1] + 2.0).abs() < 1e-6);
        assert!((f[2] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn path_middle_value_matches_closed_form() {
        // Edges (1,2),(2,3) with a label of 1 on the first: the optimum of
        // (1 - x)² + x² + λ² x² is x = 1 / (2 + λ²).
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3)]).unwrap();
        let labels = LabelSet::new(2, vec![0], vec![1.0]).unwrap();
        let f = infer_divergence_free(&net, &labels, &SslConfig::default()).unwrap();
        assert!((f[1] - 1.0 / 2.01).abs() < 1e-9);
        assert!((f[1] - 0.497_512_437_8).abs() < 1e-9);
    }

    #[test]
    fn no_labels_gives_zero_flow() {
        let net = k3();
        let labels = LabelSet::new(3, vec![], vec![]).unwrap();
        let f = infer_divergence_free(&net, &labels, &SslConfig::default()).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_labels_are_returned_unchanged() {
        let net = k3();
        let labels = LabelSet::new(3, vec![2, 0, 1], vec![0.3, -1.0, 4.0]).unwrap();
        let f = infer_divergence_free(&net, &labels, &SslConfig::default()).unwrap();
        assert_eq!(&f[..], &[-1.0, 4.0, 0.3]);
    }

    #[test]
    fn agrees_with_dense_normal_equations() {
        // Oracle: (Φᵀ BᵀB Φ + λ² I) x = -Φᵀ BᵀB f⁰ solved by dense Cholesky.
        let net = FlowNetwork::from_edge_list(&[
            (1, 2), (2, 3), (3, 4), (4, 1), (1, 3), (3, 5), (5, 6), (6, 4), (2, 6),
        ])
        .unwrap();
        let labels = LabelSet::new(net.m(), vec![1, 4, 7], vec![1.5, -0.5, 2.0]).unwrap();
        let lambda = 0.1;
        let f = infer_divergence_free(&net, &labels, &SslConfig::with_lambda(lambda)).unwrap();

        let b = net.incidence_matrix().to_dense();
        let le = b.transpose() * &b;
        let free = labels.unlabeled();
        let k = free.len();
        let a = DMatrix::from_fn(k, k, |i, j| le[(free[i], free[j])] + if i == j { lambda * lambda } else { 0.0 });
        let f0 = DVector::from_vec(labels.zero_fill().into_vec());
        let g = &le * f0;
        let rhs = DVector::from_fn(k, |i, _| -g[free[i]]);
        let x = a.cholesky().unwrap().solve(&rhs);
        for (s, &r) in free.iter().enumerate() {
            assert!((f[r] - x[s]).abs() < 1e-8, "edge {r}: {} vs {}", f[r], x[s]);
        }
    }

    #[test]
    fn label_set_validation() {
        assert_eq!(LabelSet::new(3, vec![0, 0], vec![1.0, 1.0]).unwrap_err(), Error::DuplicateLabel(0));
        assert_eq!(
            LabelSet::new(3, vec![3], vec![1.0]).unwrap_err(),
            Error::EdgeIndexOutOfRange { index: 3, m: 3 }
        );
        assert!(LabelSet::new(3, vec![1], vec![f64::NAN]).is_err());
        assert!(LabelSet::new(3, vec![1], vec![]).is_err());
        let labels = LabelSet::new(4, vec![2, 0], vec![1.0, 2.0]).unwrap();
        assert_eq!(labels.unlabeled(), vec![1, 3]);
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let net = k3();
        let labels = LabelSet::new(3, vec![0], vec![1.0]).unwrap();
        assert!(infer_divergence_free(&net, &labels, &SslConfig::with_lambda(-1.0)).is_err());
    }

    #[test]
    fn harmonic_on_path_is_linear() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let y = vertex_ssl_harmonic(&net, &[(0, 0.0), (4, 4.0)]).unwrap();
        for (v, &yv) in y.iter().enumerate() {
            assert!((yv - v as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_needs_a_label_per_component() {
        let net = FlowNetwork::with_vertices(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(
            vertex_ssl_harmonic(&net, &[(0, 1.0)]).unwrap_err(),
            Error::UnlabeledComponent { component: 1 }
        );
    }

    #[test]
    fn line_graph_of_triangle_averages() {
        // Line graph of K3 is K3: interpolating a single label spreads it.
        let net = k3();
        let labels = LabelSet::new(3, vec![0], vec![2.0]).unwrap();
        let f = baseline_line_graph(&net, &labels).unwrap();
        assert!(f.iter().all(|&v| (v - 2.0).abs() < 1e-9));
        // Two opposite labels meet at their mean.
        let labels = LabelSet::new(3, vec![0, 1], vec![1.0, -1.0]).unwrap();
        let f = baseline_line_graph(&net, &labels).unwrap();
        assert!(f[2].abs() < 1e-9);
    }

    #[test]
    fn line_graph_star_is_constant() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (1, 3), (1, 4), (1, 5)]).unwrap();
        let labels = LabelSet::new(4, vec![2], vec![0.7]).unwrap();
        let f = baseline_line_graph(&net, &labels).unwrap();
        assert!(f.iter().all(|&v| (v - 0.7).abs() < 1e-9));
    }

    #[test]
    fn line_graph_unlabeled_component_is_zero() {
        let net = FlowNetwork::with_vertices(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let labels = LabelSet::new(3, vec![0], vec![1.0]).unwrap();
        let f = baseline_line_graph(&net, &labels).unwrap();
        assert!((f[1] - 1.0).abs() < 1e-9);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn zero_fill_baseline() {
        let net = k3();
        let labels = LabelSet::new(3, vec![1], vec![5.0]).unwrap();
        assert_eq!(&baseline_zero_fill(&net, &labels).unwrap()[..], &[0.0, 5.0, 0.0]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
