//! Flow networks and their discrete operators.
//!
//! A [`FlowNetwork`] fixes a dense vertex numbering and a reference
//! orientation for every edge: edge `r = (i, j)` always has `i < j`, and a
//! positive flow value means flow from `i` to `j`. Edges are kept in
//! lexicographic order, so the incidence matrix, the curl matrix, flow vectors
//! and label indices all agree on edge numbering.
//!
//! Vertices and edges are 0-based inside the library. The external vertex id
//! (as read from a graph file) is kept per vertex and used for I/O.

mod io;
mod sparse;

use std::collections::{HashMap, HashSet};
use std::ops::{Deref, DerefMut};

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use io::{
    parse_graph, parse_labels, parse_flow_records, read_graph_file, read_flow_file,
    read_labels_file, write_flows, write_labels, write_graph, FlowRecords,
};
pub use sparse::SparseOperator;

/// Net flow on every edge, signed against the reference orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlow(Vec<f64>);

/// One real value per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexLabels(Vec<f64>);

macro_rules! vector_newtype {
    ($t:ident) => {
        impl $t {
            pub fn new(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                crate::solvers::norm(&self.0)
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl Deref for $t {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

vector_newtype!(EdgeFlow);
vector_newtype!(VertexLabels);

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    ids: Vec<u64>,
    id_index: HashMap<u64, usize>,
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    triangles: Vec<(usize, usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    component: Vec<usize>,
    n_components: usize,
}

impl FlowNetwork {
    /// Builds a network from an edge list of positive vertex ids.
    ///
    /// Vertices are renumbered densely in order of first appearance. Edges are
    /// canonicalised to `i < j` and sorted. Self-loops and duplicate edges are
    /// rejected; disconnected graphs are accepted with a warning.
    pub fn from_edge_list(edge_list: &[(i64, i64)]) -> Result<Self> {
        if edge_list.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut ids = Vec::new();
        let mut id_index = HashMap::new();
        let mut dense = Vec::with_capacity(edge_list.len());
        for &(a, b) in edge_list {
            let mut idx = |v: i64| -> Result<usize> {
                if v <= 0 {
                    return Err(Error::InvalidVertex(v));
                }
                let v = v as u64;
                Ok(*id_index.entry(v).or_insert_with(|| {
                    ids.push(v);
                    ids.len() - 1
                }))
            };
            let i = idx(a)?;
            let j = idx(b)?;
            dense.push((i, j));
        }
        Self::assemble(ids, dense)
    }

    /// Builds a network on vertices `0..n` from 0-based pairs. Vertex `k`
    /// gets external id `k + 1`. Isolated vertices are allowed.
    pub fn with_vertices(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) references a vertex outside 0..{n}"
                )));
            }
        }
        Self::assemble((1..=n as u64).collect(), pairs.to_vec())
    }

    fn assemble(ids: Vec<u64>, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = ids.len();
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            if a == b {
                return Err(Error::SelfLoop(ids[a]));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(ids[a], ids[b]));
            }
            edges.push(e);
        }
        edges.sort_unstable();

        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        adjacency.iter_mut().for_each(|nb| nb.sort_unstable());

        let edge_index = edges.iter().enumerate().map(|(r, &e)| (e, r)).collect();
        let triangles = enumerate_triangles(&edges, &adjacency);
        let (component, n_components) = connected_components(&adjacency);
        if n_components > 1 {
            warn!("graph is disconnected ({n_components} components)");
        }
        let id_index = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        Ok(Self {
            ids,
            id_index,
            edges,
            edge_index,
            triangles,
            adjacency,
            component,
            n_components,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Number of triangles.
    pub fn o(&self) -> usize {
        self.triangles.len()
    }

    /// Dimension of the cycle space, `m - n + #components`.
    pub fn cycle_rank(&self) -> usize {
        self.m() + self.n_components - self.n()
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn is_connected(&self) -> bool {
        self.n_components == 1
    }

    /// Component id of each vertex, numbered by smallest member vertex.
    pub fn components(&self) -> &[usize] {
        &self.component
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[(usize, usize, usize)] {
        &self.triangles
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn vertex_id(&self, v: usize) -> u64 {
        self.ids[v]
    }

    pub fn vertex_ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn vertex_index(&self, id: u64) -> Option<usize> {
        self.id_index.get(&id).copied()
    }

    /// Index of the edge joining dense vertices `a` and `b`, with the sign
    /// of the `a -> b` direction relative to the reference orientation.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        if a < b {
            self.edge_index.get(&(a, b)).map(|&r| (r, 1.0))
        } else {
            self.edge_index.get(&(b, a)).map(|&r| (r, -1.0))
        }
    }

    pub fn check_flow(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.m() {
            return Err(Error::LengthMismatch {
                what: "edge flow",
                expected: self.m(),
                actual: f.len(),
            });
        }
        Ok(())
    }

    pub fn check_labels(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.n() {
            return Err(Error::LengthMismatch {
                what: "vertex labels",
                expected: self.n(),
                actual: y.len(),
            });
        }
        Ok(())
    }

    /// Signed incidence matrix `B` (n x m): `+1` at the tail, `-1` at the head.
    pub fn incidence_matrix(&self) -> SparseOperator {
        let mut t = Vec::with_capacity(2 * self.m());
        for (r, &(i, j)) in self.edges.iter().enumerate() {
            t.push((i, r, 1.0));
            t.push((j, r, -1.0));
        }
        SparseOperator::from_triplets(self.n(), self.m(), t)
    }

    /// Curl matrix `C` (m x o). Triangle `(i, j, k)` has `+1` on `(i, j)` and
    /// `(j, k)` and `-1` on `(i, k)`.
    pub fn curl_matrix(&self) -> SparseOperator {
        let mut t = Vec::with_capacity(3 * self.o());
        for (u, &(i, j, k)) in self.triangles.iter().enumerate() {
            t.push((self.edge_index[&(i, j)], u, 1.0));
            t.push((self.edge_index[&(j, k)], u, 1.0));
            t.push((self.edge_index[&(i, k)], u, -1.0));
        }
        SparseOperator::from_triplets(self.m(), self.o(), t)
    }

    /// Graph Laplacian `L = B Bᵀ`.
    pub fn laplacian(&self) -> SparseOperator {
        let b = self.incidence_matrix();
        b.matmul(&b.transpose())
    }

    /// Edge Laplacian `L_e = Bᵀ B`.
    pub fn edge_laplacian(&self) -> SparseOperator {
        let b = self.incidence_matrix();
        b.transpose().matmul(&b)
    }

    /// Net outflow at every vertex, `B f`.
    pub fn divergence(&self, f: &[f64]) -> Result<VertexLabels> {
        self.check_flow(f)?;
        let mut out = vec![0.0; self.n()];
        for (r, &(i, j)) in self.edges.iter().enumerate() {
            out[i] += f[r];
            out[j] -= f[r];
        }
        Ok(VertexLabels(out))
    }

    /// Gradient flow `Bᵀ y` induced by vertex potentials.
    pub fn gradient(&self, y: &[f64]) -> Result<EdgeFlow> {
        self.check_labels(y)?;
        Ok(EdgeFlow(
            self.edges.iter().map(|&(i, j)| y[i] - y[j]).collect(),
        ))
    }

    /// Circulation around every triangle, `Cᵀ f`.
    pub fn curl(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_flow(f)?;
        Ok(self
            .triangles
            .iter()
            .map(|&(i, j, k)| {
                f[self.edge_index[&(i, j)]] + f[self.edge_index[&(j, k)]]
                    - f[self.edge_index[&(i, k)]]
            })
            .collect())
    }

    /// Line graph: vertex `r` stands for edge `r`; two vertices are adjacent
    /// when the edges share an endpoint.
    pub fn line_graph(&self) -> FlowNetwork {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.n()];
        for (r, &(i, j)) in self.edges.iter().enumerate() {
            incident[i].push(r);
            incident[j].push(r);
        }
        let mut pairs = Vec::new();
        for inc in &incident {
            for (a, &r) in inc.iter().enumerate() {
                for &s in &inc[a + 1..] {
                    pairs.push((r, s));
                }
            }
        }
        // Simple graphs: two edges share at most one endpoint.
        FlowNetwork::with_vertices(self.m(), &pairs).expect("line graph of a simple graph is simple")
    }

    /// Reads an antisymmetric `n x n` flow matrix into an edge flow vector:
    /// `f_r = F[i, j]` for edge `r = (i, j)`.
    pub fn flow_mat_to_vec(&self, mat: &DMatrix<f64>) -> Result<EdgeFlow> {
        let n = self.n();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "flow matrix is {}x{}, network has {n} vertices",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow matrix"));
        }
        let scale = mat.amax().max(1.0);
        let mut max_violation: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                max_violation = max_violation.max((mat[(i, j)] + mat[(j, i)]).abs());
            }
        }
        if max_violation > 1e-12 * scale {
            return Err(Error::NotAntisymmetric { max_violation });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if mat[(i, j)] != 0.0 && !self.edge_index.contains_key(&(i, j)) {
                    return Err(Error::OffEdgeEntry(i, j));
                }
            }
        }
        Ok(EdgeFlow(
            self.edges.iter().map(|&(i, j)| mat[(i, j)]).collect(),
        ))
    }

    pub fn flow_vec_to_mat(&self, f: &[f64]) -> Result<DMatrix<f64>> {
        self.check_flow(f)?;
        let mut mat = DMatrix::zeros(self.n(), self.n());
        for (r, &(i, j)) in self.edges.iter().enumerate() {
            mat[(i, j)] = f[r];
            mat[(j, i)] = -f[r];
        }
        Ok(mat)
    }
}

fn enumerate_triangles(
    edges: &[(usize, usize)],
    adjacency: &[Vec<usize>],
) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for &(i, j) in edges {
        // Both lists are sorted; walk the forward neighbours (> j) of i and j.
        let a = &adjacency[i][adjacency[i].partition_point(|&v| v <= j)..];
        let b = &adjacency[j][adjacency[j].partition_point(|&v| v <= j)..];
        let (mut p, mut q) = (0, 0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    out.push((i, j, a[p]));
                    p += 1;
                    q += 1;
                }
            }
        }
    }
    out
}

fn connected_components(adjacency: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = adjacency.len();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}
