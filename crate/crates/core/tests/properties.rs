use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use edgeflow::active::{cycle_sigma_min, select_random, select_recursive_bisection, select_rrqr};
use edgeflow::experiments::{pearson, random_connected};
use edgeflow::market::{price_arbitrage_free, pricing_objective};
use edgeflow::solvers::{box_qp, dot, lsqr, norm};
use edgeflow::ssl::{divergence_objective, infer_divergence_free};
use edgeflow::{hodge_decompose, ExchangeMarket, FlowNetwork, LabelSet, Quote, SpectralBasis, SslConfig};

fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn graph() -> impl Strategy<Value = FlowNetwork> {
    (4usize..=15, 0.2f64..0.6, any::<u64>())
        .prop_map(|(n, density, seed)| random_connected(n, density, seed).unwrap())
}

fn cyclic_graph() -> impl Strategy<Value = FlowNetwork> {
    graph().prop_filter("needs a cycle", |g| g.cycle_rank() > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_is_degree_minus_adjacency(net in graph()) {
        let l = net.laplacian().to_dense();
        for i in 0..net.n() {
            prop_assert!(l.row(i).sum().abs() < 1e-12);
            prop_assert_eq!(l[(i, i)], net.degree(i) as f64);
            for j in 0..net.n() {
                if i != j {
                    let adjacent = net.neighbors(i).contains(&j);
                    prop_assert_eq!(l[(i, j)], if adjacent { -1.0 } else { 0.0 });
                }
            }
        }
        let le = net.edge_laplacian().to_dense();
        for r in 0..net.m() {
            prop_assert_eq!(le[(r, r)], 2.0);
        }
    }

    #[test]
    fn gradients_are_curl_free(net in graph(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let y = gaussian(&mut rng, net.n());
            let g = net.gradient(&y).unwrap();
            let curl = net.curl(&g).unwrap();
            prop_assert!(curl.iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn incidence_is_adjoint(net in graph(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = net.incidence_matrix();
        let f = gaussian(&mut rng, net.m());
        let y = gaussian(&mut rng, net.n());
        let lhs = dot(&b.mul_vec(&f), &y);
        let rhs = dot(&f, &b.tr_mul_vec(&y));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (norm(&f) * norm(&y)).max(1.0));
    }

    #[test]
    fn spectral_basis_dimensions_and_divergence(net in graph(), seed in any::<u64>()) {
        let basis = SpectralBasis::compute(&net);
        prop_assert_eq!(basis.n_cycle(), net.m() + 1 - net.n());
        prop_assert_eq!(basis.n_cut(), net.n() - 1);
        let le = net.edge_laplacian().to_dense();
        for (k, &s) in basis.sigma().iter().enumerate() {
            let v = basis.v().column(k);
            let q = (v.transpose() * &le * v)[(0, 0)];
            prop_assert!((q - s * s).abs() < 1e-8);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = gaussian(&mut rng, net.m());
        let pc = basis.project_cycle(&f).unwrap();
        prop_assert!(net.divergence(&pc).unwrap().norm() <= 1e-8 * norm(&f));
        let p = basis.to_spectral(&f).unwrap();
        prop_assert!((norm(&p.p) - norm(&f)).abs() < 1e-10 * norm(&f));
    }

    #[test]
    fn inference_keeps_labels_and_lowers_objective(
        net in graph(),
        seed in any::<u64>(),
        ratio in 0.05f64..0.95,
        lambda in prop_oneof![Just(0.0), 1e-4f64..1.0],
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = gaussian(&mut rng, net.m());
        let k = ((ratio * net.m() as f64) as usize).max(1);
        let idx = select_random(net.m(), k, seed).unwrap().edges;
        let labels = LabelSet::from_flow(&truth, idx.clone()).unwrap();
        let f = infer_divergence_free(&net, &labels, &SslConfig::with_lambda(lambda)).unwrap();
        for &r in &idx {
            prop_assert_eq!(f[r].to_bits(), truth[r].to_bits());
        }
        let at_f = divergence_objective(&net, &labels, &f, lambda).unwrap();
        let at_zero = divergence_objective(&net, &labels, &labels.zero_fill(), lambda).unwrap();
        prop_assert!(at_f <= at_zero * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn hodge_components_are_idempotent(net in graph(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = gaussian(&mut rng, net.m());
        let h = hodge_decompose(&net, &f).unwrap();
        let f2 = dot(&f, &f);
        prop_assert!(dot(&h.gradient, &h.curl).abs() <= 1e-8 * f2);
        prop_assert!(dot(&h.gradient, &h.harmonic).abs() <= 1e-8 * f2);
        prop_assert!(dot(&h.curl, &h.harmonic).abs() <= 1e-8 * f2);

        let tol = 1e-8 * norm(&f);
        let again = hodge_decompose(&net, &h.gradient).unwrap();
        prop_assert!(norm(&again.curl) <= tol && norm(&again.harmonic) <= tol);
        let again = hodge_decompose(&net, &h.curl).unwrap();
        prop_assert!(norm(&again.gradient) <= tol && norm(&again.harmonic) <= tol);
        let again = hodge_decompose(&net, &h.harmonic).unwrap();
        prop_assert!(norm(&again.gradient) <= tol && norm(&again.curl) <= tol);
        // Harmonic flows are divergence-free and curl-free.
        prop_assert!(net.divergence(&h.harmonic).unwrap().norm() <= tol);
        prop_assert!(net.curl(&h.harmonic).unwrap().iter().all(|c| c.abs() <= tol));
    }

    #[test]
    fn rrqr_beats_random_on_average(net in cyclic_graph()) {
        let basis = SpectralBasis::compute(&net);
        let c = basis.n_cycle();
        let sel = select_rrqr(&basis, c, 0).unwrap();
        let ours = cycle_sigma_min(&basis, &sel.edges);
        prop_assert!(ours > 0.0);
        let sum: f64 = (0..200)
            .map(|seed| cycle_sigma_min(&basis, &select_random(net.m(), c, seed).unwrap().edges))
            .sum();
        prop_assert!(ours >= sum / 200.0 * (1.0 - 1e-12));
    }

    #[test]
    fn rrqr_extra_labels_keep_cycle_prefix(net in cyclic_graph(), extra in 1usize..4) {
        let basis = SpectralBasis::compute(&net);
        let c = basis.n_cycle();
        let k = (c + extra).min(net.m());
        let sel = select_rrqr(&basis, k, 0).unwrap();
        let prefix = cycle_sigma_min(&basis, &sel.edges[..c]);
        prop_assert!(cycle_sigma_min(&basis, &sel.edges) >= prefix * (1.0 - 1e-12));
    }

    #[test]
    fn rrqr_selection_is_prefix_consistent(net in cyclic_graph()) {
        let basis = SpectralBasis::compute(&net);
        let full = select_rrqr(&basis, net.m(), 0).unwrap().edges;
        let mut sorted = full.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..net.m()).collect::<Vec<_>>());
        for k in [1, basis.n_cycle(), net.m() / 2] {
            prop_assert_eq!(&select_rrqr(&basis, k, 0).unwrap().edges[..], &full[..k]);
        }
    }

    #[test]
    fn bisection_selects_cut_edges(net in graph(), ratio in 0.05f64..0.6) {
        let k = ((ratio * net.m() as f64) as usize).max(1);
        let sel = select_recursive_bisection(&net, k, 2).unwrap();
        prop_assert_eq!(sel.edges.len(), k);
        let mut uniq = sel.edges.clone();
        uniq.sort_unstable();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), k);
        for e in &sel.edges {
            prop_assert!(sel.bisections.iter().any(|b| b.cut_edges.contains(e)));
        }
        for b in &sel.bisections {
            for &r in &b.cut_edges {
                let (i, j) = net.edges()[r];
                let (li, lj) = (b.left.contains(&i), b.left.contains(&j));
                let (ri, rj) = (b.right.contains(&i), b.right.contains(&j));
                prop_assert!((li && rj) || (ri && lj));
            }
        }
        let clusters = sel.clusters.as_ref().unwrap();
        prop_assert_eq!(clusters.len(), net.n());
        prop_assert_eq!(&select_recursive_bisection(&net, k, 2).unwrap(), &sel);
    }

    #[test]
    fn lsqr_residual_never_increases(rows in 3usize..30, cols in 1usize..20, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = gaussian(&mut rng, rows);
        let (_, rep) = lsqr(&a, &b, 1e-12, 0).unwrap();
        for w in rep.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lsqr_solves_consistent_systems_quickly(cols in 1usize..15, extra in 0usize..20, seed in any::<u64>()) {
        // Tall random matrices are well conditioned, so finite precision
        // does not delay convergence past the Krylov dimension.
        let rows = 2 * cols + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = nalgebra::DVector::from_vec(gaussian(&mut rng, cols));
        let b = (&a * x).as_slice().to_vec();
        let (_, rep) = lsqr(&a, &b, 1e-8, 0).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(rep.iterations <= cols);
        prop_assert!(rep.residual_norm <= 1e-6 * norm(&b));
    }

    #[test]
    fn box_qp_respects_bounds(n in 1usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.transpose() * &g + DMatrix::identity(n, n) * 0.1;
        let c = gaussian(&mut rng, n);
        let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.0..1.0)).collect();
        let (x, _) = box_qp(&q, &c, &lower, &upper, 1e-12, 0).unwrap();
        for i in 0..n {
            prop_assert!(lower[i] <= x[i] && x[i] <= upper[i]);
        }
    }

    #[test]
    fn pricing_stays_in_spread_and_improves_objective(k in 3usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names: Vec<String> = (0..k).map(|i| format!("C{i}")).collect();
        let logp: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut quotes = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                let mid = (logp[a] - logp[b] + rng.random_range(-1e-3..1e-3)).exp();
                let half = rng.random_range(1e-4..2e-3);
                quotes.push(Quote::new(&names[a], &names[b], mid * (1.0 - half), mid, mid * (1.0 + half)));
            }
        }
        let market = ExchangeMarket::from_quotes(&quotes).unwrap();
        let res = price_arbitrage_free(&market, 1e-3).unwrap();
        for r in 0..market.network().m() {
            prop_assert!(market.bid()[r] <= res.fair[r] && res.fair[r] <= market.ask()[r]);
        }
        let at_fair = pricing_objective(&market, &res.fair, 1e-3).unwrap();
        let at_mid = pricing_objective(&market, market.mid(), 1e-3).unwrap();
        prop_assert!(at_fair <= at_mid);
    }

    #[test]
    fn pearson_is_bounded(seed in any::<u64>(), len in 3usize..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(&mut rng, len);
        let b = gaussian(&mut rng, len);
        let rho = pearson(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&rho));
        prop_assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }
}
