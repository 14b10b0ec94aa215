//! Edge-space spectral basis from the SVD of the incidence matrix.
//!
//! Right singular vectors with zero singular value span the cycle space
//! (circulations, `ker B`); the rest span the cut space (gradient flows,
//! `im Bᵀ`). Columns are stored in ascending singular-value order, so the
//! `c` cycle-space columns come first.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{EdgeFlow, FlowNetwork};
use crate::solvers::{norm, svd_dense, SvdOrder};

/// Relative threshold below which a singular value counts as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    sigma: Vec<f64>,
    v: DMatrix<f64>,
    u: DMatrix<f64>,
    sigma_u: Vec<f64>,
    n_cycle: usize,
    warnings: Vec<String>,
}

/// Spectral coefficients `p = Vᵀ f`, cycle part first.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    pub p: Vec<f64>,
    pub n_cycle: usize,
}

impl SpectralCoefficients {
    pub fn cycle(&self) -> &[f64] {
        &self.p[..self.n_cycle]
    }

    pub fn cut(&self) -> &[f64] {
        &self.p[self.n_cycle..]
    }
}

impl SpectralBasis {
    pub fn compute(net: &FlowNetwork) -> Self {
        Self::compute_with_threshold(net, DEFAULT_ZERO_THRESHOLD)
    }

    pub fn compute_with_threshold(net: &FlowNetwork, rel_threshold: f64) -> Self {
        let b = net.incidence_matrix().to_dense();
        let svd = svd_dense(&b, SvdOrder::Ascending);
        let smax = svd.sigma_v.iter().fold(0.0f64, |a, &s| a.max(s));
        let cut = rel_threshold * smax;

        let mut warnings = Vec::new();
        let mut sigma = svd.sigma_v.clone();
        let mut n_cycle = 0;
        for s in sigma.iter_mut() {
            if *s < cut {
                *s = 0.0;
                n_cycle += 1;
            } else if *s < 10.0 * cut {
                warnings.push(format!(
                    "singular value {s:e} lies within a factor 10 of the zero threshold {cut:e}"
                ));
            }
        }
        for &s in &svd.sigma_v {
            if s < cut && s > 0.1 * cut {
                warnings.push(format!(
                    "singular value {s:e} lies within a factor 10 of the zero threshold {cut:e}"
                ));
            }
        }
        if n_cycle != net.cycle_rank() {
            warnings.push(format!(
                "found {n_cycle} zero singular values, expected cycle rank {}",
                net.cycle_rank()
            ));
        }
        if !net.is_connected() {
            warnings.push(format!(
                "graph has {} connected components",
                net.n_components()
            ));
        }
        for w in &warnings {
            warn!("{w}");
        }
        let mut sigma_u = svd.sigma_u.clone();
        sigma_u.iter_mut().for_each(|s| {
            if *s < cut {
                *s = 0.0
            }
        });
        Self {
            sigma,
            v: svd.v,
            u: svd.u,
            sigma_u,
            n_cycle,
            warnings,
        }
    }

    pub fn m(&self) -> usize {
        self.v.nrows()
    }

    /// Dimension of the cycle space, `c`.
    pub fn n_cycle(&self) -> usize {
        self.n_cycle
    }

    pub fn n_cut(&self) -> usize {
        self.m() - self.n_cycle
    }

    /// Singular value attached to each column of `V` (ascending, zeros first).
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Full `m x m` orthonormal edge basis.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// `n x n` vertex basis (left singular vectors), ascending.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn sigma_u(&self) -> &[f64] {
        &self.sigma_u
    }

    pub fn v_cycle(&self) -> DMatrix<f64> {
        self.v.columns(0, self.n_cycle).into_owned()
    }

    pub fn v_cut(&self) -> DMatrix<f64> {
        self.v.columns(self.n_cycle, self.n_cut()).into_owned()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn to_spectral(&self, f: &[f64]) -> Result<SpectralCoefficients> {
        self.check(f.len())?;
        let p = self.v.tr_mul(&nalgebra::DVector::from_column_slice(f));
        Ok(SpectralCoefficients {
            p: p.iter().copied().collect(),
            n_cycle: self.n_cycle,
        })
    }

    pub fn from_spectral(&self, p: &[f64]) -> Result<EdgeFlow> {
        self.check(p.len())?;
        let f = &self.v * nalgebra::DVector::from_column_slice(p);
        Ok(EdgeFlow::new(f.iter().copied().collect()))
    }

    /// Orthogonal projection onto the cycle space, `V_C V_Cᵀ f`.
    pub fn project_cycle(&self, f: &[f64]) -> Result<EdgeFlow> {
        let mut p = self.to_spectral(f)?.p;
        p[self.n_cycle..].iter_mut().for_each(|v| *v = 0.0);
        self.from_spectral(&p)
    }

    /// `‖p_R‖ / ‖p_C‖`; infinite when the cycle part vanishes.
    pub fn spectral_ratio(&self, f: &[f64]) -> Result<f64> {
        if self.n_cycle == 0 {
            return Err(Error::NoCycles);
        }
        let p = self.to_spectral(f)?;
        let cyc = norm(p.cycle());
        let cut = norm(p.cut());
        Ok(if cyc == 0.0 { f64::INFINITY } else { cut / cyc })
    }

    /// Rows `(percentile, σ, |p|)` in ascending-σ order, with `|p|` scaled
    /// so that the root-mean-square of the cycle coefficients is 0.2.
    /// Without cycle energy the coefficients are left unscaled.
    pub fn normalized_spectrum(&self, f: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let p = self.to_spectral(f)?;
        let c = self.n_cycle;
        let rms = if c > 0 {
            (p.cycle().iter().map(|v| v * v).sum::<f64>() / c as f64).sqrt()
        } else {
            0.0
        };
        let scale = if rms > 0.0 { 0.2 / rms } else { 1.0 };
        let m = self.m() as f64;
        Ok(p.p
            .iter()
            .zip(&self.sigma)
            .enumerate()
            .map(|(k, (pk, s))| (100.0 * (k as f64 + 1.0) / m, *s, pk.abs() * scale))
            .collect())
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.m() {
            return Err(Error::LengthMismatch {
                what: "edge-space vector",
                expected: self.m(),
                actual: len,
            });
        }
        Ok(())
    }
}
