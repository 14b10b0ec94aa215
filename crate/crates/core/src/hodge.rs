//! Hodge decomposition of an edge flow into gradient, curl and harmonic
//! parts: `f = Bᵀ y + C w + h` with `B h = 0` and `Cᵀ h = 0`.

use log::warn;

use crate::error::Result;
use crate::graph::{EdgeFlow, FlowNetwork, VertexLabels};
use crate::solvers::{lsqr, Transposed};

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeComponents {
    /// `Bᵀ y`
    pub gradient: EdgeFlow,
    /// `C w`
    pub curl: EdgeFlow,
    pub harmonic: EdgeFlow,
    /// Minimum-norm vertex potentials `y`.
    pub potentials: VertexLabels,
    /// Minimum-norm triangle weights `w`.
    pub triangle_weights: Vec<f64>,
}

pub const HODGE_TOL: f64 = 1e-12;

pub fn hodge_decompose(net: &FlowNetwork, f: &[f64]) -> Result<HodgeComponents> {
    net.check_flow(f)?;
    let m = net.m();
    let b = net.incidence_matrix();
    let (y, rep) = lsqr(&Transposed(&b), f, HODGE_TOL, 10 * net.n().max(10))?;
    if !rep.converged {
        warn!("gradient projection did not converge ({} iterations)", rep.iterations);
    }
    let gradient = EdgeFlow::new(b.tr_mul_vec(&y));
    let r: Vec<f64> = f.iter().zip(gradient.iter()).map(|(a, g)| a - g).collect();

    let (w, curl) = if net.o() == 0 {
        (Vec::new(), EdgeFlow::zeros(m))
    } else {
        let c = net.curl_matrix();
        let (w, rep) = lsqr(&c, &r, HODGE_TOL, 10 * net.o().max(10))?;
        if !rep.converged {
            warn!("curl projection did not converge ({} iterations)", rep.iterations);
        }
        let cw = c.mul_vec(&w);
        (w, EdgeFlow::new(cw))
    };
    let harmonic = EdgeFlow::new(r.iter().zip(curl.iter()).map(|(a, c)| a - c).collect());
    Ok(HodgeComponents {
        gradient,
        curl,
        harmonic,
        potentials: VertexLabels::new(y),
        triangle_weights: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::dot;

    #[test]
    fn triangle_circulation_is_pure_curl() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (1, 3)]).unwrap();
        // Edge order is (1,2), (1,3), (2,3); the boundary of the triangle
        // is (1,2) + (2,3) - (1,3).
        let h = hodge_decompose(&net, &[1.0, -1.0, 1.0]).unwrap();
        assert!(h.gradient.norm() < 1e-10);
        assert!(h.harmonic.norm() < 1e-10);
        assert!((h.curl[0] - 1.0).abs() < 1e-10);
        assert!((h.triangle_weights[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn square_circulation_is_harmonic() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 4), (1, 4)]).unwrap();
        // Edge order is (1,2), (1,4), (2,3), (3,4).
        let h = hodge_decompose(&net, &[1.0, -1.0, 1.0, 1.0]).unwrap();
        assert!(h.gradient.norm() < 1e-10);
        assert!(h.curl.norm() == 0.0);
        assert!((h.harmonic.norm() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn gradient_flow_is_recovered() {
        let net = FlowNetwork::from_edge_list(&[(1, 2), (2, 3), (3, 1), (3, 4)]).unwrap();
        let g = net.gradient(&[0.0, 1.0, 3.0, -2.0]).unwrap();
        let h = hodge_decompose(&net, &g).unwrap();
        for (a, b) in h.gradient.iter().zip(g.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(dot(&h.curl, &h.harmonic).abs() < 1e-10);
    }
}
