use dricci_core::chain::{MarkovData, inner};
use dricci_core::concentration::{
    check_transport_entropy, check_transport_information, check_w1_l1_bound, fisher_information,
    fisher_information_gamma, laplace_lower_bound, relative_entropy,
};
use dricci_core::curvature::{curvature_matrix, gradient_of_laplacian, kappa_lp};
use dricci_core::digraph::{DirectedGraph, distances, is_lipschitz, lipschitz_constant};
use dricci_core::heat::HeatOperator;
use dricci_core::lp::{coupling_lp, solve_lp, solve_transport};
use dricci_core::sampling::{self, density_sample, lipschitz_sample, random_measure, random_strongly_connected};
use dricci_core::transport::{pairing, wasserstein, wasserstein_value};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn graph(seed: u64, max_n: usize) -> DirectedGraph {
    let mut rng = sampling::stream(seed, 0);
    let n = 3 + (seed % (max_n as u64 - 2)) as usize;
    let p = 0.1 + (seed % 5) as f64 * 0.1;
    random_strongly_connected(n, p, &mut rng).unwrap()
}

fn values(n: usize, seed: u64) -> Vec<f64> {
    use rand::RngExt;
    let mut rng = sampling::stream(seed, 99);
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn directed_triangle_inequality(seed in any::<u64>()) {
        let g = graph(seed, 10);
        let d = distances(&g).unwrap();
        let n = g.n();
        for x in 0..n {
            prop_assert_eq!(d.d(x, x), 0);
            for y in 0..n {
                if x != y {
                    prop_assert!(d.d(x, y) >= 1);
                }
                for z in 0..n {
                    prop_assert!(d.d(x, z) <= d.d(x, y) + d.d(y, z));
                }
            }
        }
        prop_assert!(d.lambda() >= 1);
    }

    #[test]
    fn reversed_distances_are_transposed(seed in any::<u64>()) {
        let g = graph(seed, 10);
        let d = distances(&g).unwrap();
        let r = distances(&g.reversed()).unwrap();
        for x in 0..g.n() {
            for y in 0..g.n() {
                prop_assert_eq!(d.d(x, y), r.d(y, x));
            }
        }
    }

    #[test]
    fn lipschitz_calculus(seed in any::<u64>(), alpha in 0.0f64..5.0, c in -10.0f64..10.0) {
        let g = graph(seed, 9);
        let d = distances(&g).unwrap();
        let f = values(g.n(), seed);
        let lip = lipschitz_constant(&f, &d);
        let scaled: Vec<f64> = f.iter().map(|v| alpha * v).collect();
        let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
        prop_assert!((lipschitz_constant(&scaled, &d) - alpha * lip).abs() <= 1e-12 * (1.0 + alpha * lip));
        prop_assert!((lipschitz_constant(&shifted, &d) - lip).abs() <= 1e-12);
        // Membership in the 1-Lipschitz polytope.
        let unit: Vec<f64> = f.iter().map(|v| v / lip.max(1e-300)).collect();
        let inside = (0..g.n()).all(|z| (0..g.n()).all(|w| unit[w] - unit[z] <= d.df(z, w) + 1e-12));
        prop_assert_eq!(inside, lipschitz_constant(&unit, &d) <= 1.0 + 1e-12);
        // The constant is attained on an arc.
        let on_arcs = g.arcs().map(|(x, y, _)| f[y] - f[x]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((on_arcs - lip).abs() <= 1e-12);
    }

    #[test]
    fn kernels_are_reversible_and_self_adjoint(seed in any::<u64>()) {
        let g = graph(seed, 9);
        let md = MarkovData::new(&g).unwrap();
        prop_assert!(md.reversibility_residual() <= 1e-14);
        let l = md.laplacian();
        let f0 = values(g.n(), seed);
        let f1 = values(g.n(), seed ^ 0xabcdef);
        let m = md.measure();
        prop_assert!((inner(&l.apply(&f0), &f1, m) - inner(&f0, &l.apply(&f1), m)).abs() <= 1e-10);
        for row in [md.transition(), md.reverse(), md.mean()] {
            for x in 0..g.n() {
                prop_assert!((row.row(x).sum() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn transport_fast_path_matches_generic_lp(seed in any::<u64>()) {
        let g = graph(seed, 8);
        let d = distances(&g).unwrap();
        let mut rng = sampling::stream(seed, 1);
        let nu0 = random_measure(g.n(), &mut rng);
        let nu1 = random_measure(g.n(), &mut rng);
        let fast = solve_transport(&d.cost_matrix(), &nu0, &nu1).unwrap();
        let lp = solve_lp(&coupling_lp(&d.cost_matrix(), &nu0, &nu1)).unwrap();
        prop_assert!((fast.value - lp.objective).abs() <= 1e-9);
        prop_assert!(lp.gap <= 1e-8);
        prop_assert!(fast.value <= d.max_distance() as f64 + 1e-12);
        // Any 1-Lipschitz function gives a lower bound.
        for f in lipschitz_sample(&d, 20, seed, 2) {
            prop_assert!(pairing(&f, &nu0, &nu1) <= fast.value + 1e-12);
        }
    }

    #[test]
    fn transport_is_permutation_invariant(seed in any::<u64>()) {
        let g = graph(seed, 8);
        let n = g.n();
        let d = distances(&g).unwrap();
        let perm: Vec<usize> = (0..n).map(|i| (i * 2 + 1) % n).collect();
        let perm = if (0..n).all(|i| perm.contains(&i)) { perm } else { (0..n).rev().collect() };
        let mu = DMatrix::from_fn(n, n, |x, y| {
            let (px, py) = (perm.iter().position(|&p| p == x).unwrap(), perm.iter().position(|&p| p == y).unwrap());
            g.weight(px, py)
        });
        let h = DirectedGraph::from_matrix(mu).unwrap();
        let dh = distances(&h).unwrap();
        let mut rng = sampling::stream(seed, 3);
        let nu0 = random_measure(n, &mut rng);
        let nu1 = random_measure(n, &mut rng);
        let mut q0 = vec![0.0; n];
        let mut q1 = vec![0.0; n];
        for i in 0..n {
            q0[perm[i]] = nu0[i];
            q1[perm[i]] = nu1[i];
        }
        let a = wasserstein(&nu0, &nu1, &d).unwrap();
        let b = wasserstein(&q0, &q1, &dh).unwrap();
        // Relabelling changes the pivot order, so agreement is to rounding.
        prop_assert!((a.value - b.value).abs() <= 1e-12);
    }

    #[test]
    fn curvature_invariants(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let g = graph(seed, 6);
        let md = MarkovData::new(&g).unwrap();
        let d = distances(&g).unwrap();
        let scaled = DirectedGraph::from_matrix(g.weights() * scale).unwrap();
        let ms = MarkovData::new(&scaled).unwrap();
        for x in 0..g.n() {
            for y in 0..g.n() {
                if x == y {
                    continue;
                }
                let r = kappa_lp(x, y, &md, &d).unwrap();
                prop_assert!(is_lipschitz(&r.witness, &d, 1.0, 1e-9));
                prop_assert!((r.witness[y] - r.witness[x] - d.df(x, y)).abs() <= 1e-9);
                let dist: Vec<f64> = (0..g.n()).map(|z| d.df(x, z)).collect();
                prop_assert!(r.value <= gradient_of_laplacian(&dist, x, y, &md, &d) + 1e-10);
                let shifted: Vec<f64> = r.witness.iter().map(|v| v + 3.5).collect();
                prop_assert!((gradient_of_laplacian(&shifted, x, y, &md, &d) - r.value).abs() <= 1e-10);
                prop_assert!((kappa_lp(x, y, &ms, &d).unwrap().value - r.value).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn heat_semigroup_identities(seed in any::<u64>(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let g = graph(seed, 8);
        let md = MarkovData::new(&g).unwrap();
        let h = HeatOperator::new(&md).unwrap();
        let f0 = values(g.n(), seed);
        let f1 = values(g.n(), seed.wrapping_add(1));
        let a = h.apply(s + t, &f0).unwrap();
        let b = h.apply(s, &h.apply(t, &f0).unwrap()).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-9);
        }
        let m = md.measure();
        prop_assert!((inner(&h.apply(t, &f0).unwrap(), &f1, m) - inner(&f0, &h.apply(t, &f1).unwrap(), m)).abs() <= 1e-10);
        for x in 0..g.n() {
            let p = h.heat_kernel(x, t).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
        let eig = h.eigenvalues();
        prop_assert!(eig[0].abs() <= 1e-12 && eig[1] > 1e-9);
        prop_assert!(eig.iter().all(|&l| (-1e-12..=2.0 + 1e-12).contains(&l)));
        let u = h.apply_uniformized(t, &f0).unwrap();
        let e = h.apply(t, &f0).unwrap();
        for (p, q) in u.iter().zip(&e) {
            prop_assert!((p - q).abs() <= 1e-10);
        }
    }

    #[test]
    fn entropy_and_information(seed in any::<u64>()) {
        let g = graph(seed, 8);
        let md = MarkovData::new(&g).unwrap();
        for rho in density_sample(md.measure(), 30, seed, 4) {
            let ent = relative_entropy(&md, &rho);
            prop_assert!(ent >= -1e-12);
            let is_one = rho.iter().all(|&r| (r - 1.0).abs() <= 1e-12);
            if is_one {
                prop_assert!(ent.abs() <= 1e-12);
            } else {
                prop_assert!(ent > 1e-10);
            }
            let i = fisher_information(&md, &rho);
            prop_assert!((i - fisher_information_gamma(&md, &rho)).abs() <= 1e-12);
            prop_assert!((0.0..=8.0 + 1e-12).contains(&i));
        }
    }

    #[test]
    fn laplace_lower_bound_is_midpoint_convex(seed in any::<u64>(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let g = graph(seed, 8);
        let md = MarkovData::new(&g).unwrap();
        let d = distances(&g).unwrap();
        let fs = lipschitz_sample(&d, 60, seed, 5);
        let la = laplace_lower_bound(&md, &d, a, &fs).unwrap();
        let lb = laplace_lower_bound(&md, &d, b, &fs).unwrap();
        let mid = laplace_lower_bound(&md, &d, 0.5 * (a + b), &fs).unwrap();
        prop_assert!(mid <= 0.5 * (la + lb) + 1e-12);
        prop_assert!(laplace_lower_bound(&md, &d, a, &fs[..20]).unwrap() <= la);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn functional_inequalities_hold_under_positive_curvature(seed in any::<u64>()) {
        let g = graph(seed, 8);
        let md = MarkovData::new(&g).unwrap();
        let d = distances(&g).unwrap();
        let k = curvature_matrix(&md, &d).unwrap().k;
        prop_assume!(k > 0.0);
        let lambda = d.lambda() as f64;
        for rho in density_sample(md.measure(), 40, seed, 6) {
            prop_assert!(check_w1_l1_bound(&md, &d, k, lambda, &rho).unwrap().pass);
            prop_assert!(check_transport_information(&md, &d, k, lambda, &rho).unwrap().pass);
            prop_assert!(check_transport_entropy(&md, &d, k, lambda, &rho).unwrap().pass);
        }
    }

    #[test]
    fn wasserstein_triangle_inequality(seed in any::<u64>()) {
        let g = graph(seed, 8);
        let d = distances(&g).unwrap();
        let mut rng = sampling::stream(seed, 7);
        let a = random_measure(g.n(), &mut rng);
        let b = random_measure(g.n(), &mut rng);
        let c = random_measure(g.n(), &mut rng);
        let ab = wasserstein_value(&a, &b, &d).unwrap();
        let bc = wasserstein_value(&b, &c, &d).unwrap();
        let ac = wasserstein_value(&a, &c, &d).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }
}
