//! Synthetic flows, label sampling, accuracy metrics and the ratio sweep.

mod generators;
mod ingest;
mod sweep;

pub use generators::{barbell, barbell_of_grids, complete, grid, random_connected, ring};
pub use ingest::{ingest_play_sequence, ingest_tntp_flows, IngestedFlows, PlayMode};
pub use sweep::{run_sweep, CellSummary, ExperimentResult, SweepConfig, SweepRow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::EdgeFlow;
use crate::solvers::norm;
use crate::spectral::SpectralBasis;

/// Spectrum shape of synthetic flows: `p_α = b / (σ_α + ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub b: f64,
    pub eps: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { b: 0.02, eps: 0.1 }
    }
}

/// `f = V p` with coefficients decaying in the singular value, so the
/// cycle space (σ = 0) carries the largest coefficients.
pub fn synth_flow(basis: &SpectralBasis, cfg: &SynthConfig) -> Result<EdgeFlow> {
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {}", cfg.eps)));
    }
    if !cfg.b.is_finite() {
        return Err(Error::NonFinite("synthetic flow magnitude"));
    }
    let p: Vec<f64> = basis.sigma().iter().map(|s| cfg.b / (s + cfg.eps)).collect();
    basis.from_spectral(&p)
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "correlation input",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter("correlation needs at least two entries".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// `‖estimate - truth‖ / ‖truth‖`.
pub fn relative_l2(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "estimate",
            expected: truth.len(),
            actual: estimate.len(),
        });
    }
    let t = norm(truth);
    if t == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let d: Vec<f64> = estimate.iter().zip(truth).map(|(a, b)| a - b).collect();
    Ok(norm(&d) / t)
}

/// Number of labels for a ratio: `floor(ratio · m)`, with a small guard
/// against products such as `0.29 · 100` landing just below an integer.
pub fn label_count(m: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!("label ratio must lie in (0, 1], got {ratio}")));
    }
    Ok(((ratio * m as f64) + 1e-9).floor().min(m as f64) as usize)
}

/// `floor(ratio · m)` distinct edge indices drawn uniformly, ascending.
pub fn random_labels(m: usize, ratio: f64, seed: u64) -> Result<Vec<usize>> {
    let k = label_count(m, ratio)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, m, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
/// Values are rounded to ten decimals so that `0.1:0.1:0.3` gives exactly
/// `0.1, 0.2, 0.3`.
pub fn parse_ratios(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("invalid ratio list '{spec}'"));
    let round = |x: f64| (x * 1e10).round() / 1e10;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let out: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| round(start + k as f64 * step)).collect()
    } else {
        spec.split(',').map(parse).collect::<Result<_>>()?
    };
    for &r in &out {
        label_count(1, r)?;
    }
    Ok(out)
}
