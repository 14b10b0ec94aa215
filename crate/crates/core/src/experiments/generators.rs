//! Built-in test graphs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::FlowNetwork;

fn positive(what: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::InvalidParameter(format!("{what} must be at least {min}, got {v}")));
    }
    Ok(())
}

fn grid_pairs(rows: usize, cols: usize, offset: usize, out: &mut Vec<(usize, usize)>) {
    let v = |r: usize, c: usize| offset + r * cols + c;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                out.push((v(r, c), v(r, c + 1)));
            }
            if r + 1 < rows {
                out.push((v(r, c), v(r + 1, c)));
            }
        }
    }
}

/// `rows x cols` lattice; vertex `r * cols + c` has id `r * cols + c + 1`.
pub fn grid(rows: usize, cols: usize) -> Result<FlowNetwork> {
    positive("grid rows", rows, 1)?;
    positive("grid columns", cols, 1)?;
    if rows * cols < 2 {
        return Err(Error::EmptyGraph);
    }
    let mut pairs = Vec::new();
    grid_pairs(rows, cols, 0, &mut pairs);
    FlowNetwork::with_vertices(rows * cols, &pairs)
}

pub fn ring(n: usize) -> Result<FlowNetwork> {
    positive("ring size", n, 3)?;
    let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    FlowNetwork::with_vertices(n, &pairs)
}

pub fn complete(n: usize) -> Result<FlowNetwork> {
    positive("complete graph size", n, 2)?;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    FlowNetwork::with_vertices(n, &pairs)
}

/// Two copies of `K_k` joined by the single edge `(k - 1, k)`.
pub fn barbell(k: usize) -> Result<FlowNetwork> {
    positive("barbell clique size", k, 2)?;
    let mut pairs = Vec::new();
    for off in [0, k] {
        for i in 0..k {
            for j in (i + 1)..k {
                pairs.push((off + i, off + j));
            }
        }
    }
    pairs.push((k - 1, k));
    FlowNetwork::with_vertices(2 * k, &pairs)
}

/// Two `rows x cols` grids side by side, joined by `bridges` edges from
/// the last column of the first grid to the first column of the second,
/// spread evenly over the rows. Vertices `0..rows*cols` form the first grid.
pub fn barbell_of_grids(rows: usize, cols: usize, bridges: usize) -> Result<FlowNetwork> {
    positive("grid rows", rows, 1)?;
    positive("grid columns", cols, 1)?;
    positive("bridge count", bridges, 1)?;
    if bridges > rows {
        return Err(Error::InvalidParameter(format!(
            "at most {rows} bridges fit between {rows}-row grids"
        )));
    }
    let half = rows * cols;
    let mut pairs = Vec::new();
    grid_pairs(rows, cols, 0, &mut pairs);
    grid_pairs(rows, cols, half, &mut pairs);
    for b in 0..bridges {
        let r = (2 * b + 1) * rows / (2 * bridges);
        pairs.push((r * cols + cols - 1, half + r * cols));
    }
    FlowNetwork::with_vertices(2 * half, &pairs)
}

/// Connected graph on `n` vertices with `max(n - 1, round(density · n(n-1)/2))`
/// edges: a random spanning tree plus uniformly chosen extra pairs.
pub fn random_connected(n: usize, density: f64, seed: u64) -> Result<FlowNetwork> {
    positive("vertex count", n, 2)?;
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter(format!("density must lie in [0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n * (n - 1) / 2;
    let target = ((density * total as f64).round() as usize).clamp(n - 1, total);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut used = std::collections::HashSet::new();
    let mut pairs = Vec::with_capacity(target);
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let e = (order[k].min(parent), order[k].max(parent));
        used.insert(e);
        pairs.push(e);
    }
    let mut rest: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|e| !used.contains(e))
        .collect();
    rest.shuffle(&mut rng);
    pairs.extend(rest.into_iter().take(target - (n - 1)));
    FlowNetwork::with_vertices(n, &pairs)
}
