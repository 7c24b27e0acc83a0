use alf::dynamics::{Perturbation, PerturbedSystem};
use alf::graph::{Graph, Permutation};
use alf::response::{ResponseField, ResponseFunction};
use alf::slowfast::{PlaneSystem, SingularityType, Stability};
use alf::symmetry::{equivariance_defect, fixed_point_space, PermutationGroup, GROUP_CAP};
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

/// Real eigenvalues of the companion matrix of `Σ cⱼ xʲ` (leading coefficient nonzero).
fn companion_real_roots(c: &[f64]) -> Vec<f64> {
    let d = c.len() - 1;
    let lead = c[d];
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            -c[d - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut r: Vec<f64> = m.complex_eigenvalues().iter().filter(|z| z.im.abs() < 1e-7).map(|z| z.re).collect();
    r.sort_by(f64::total_cmp);
    r
}

fn distinct_roots(lo: f64, hi: f64, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, 1..=max).prop_filter("well separated", |rs| {
        let mut s = rs.clone();
        s.sort_by(f64::total_cmp);
        s.windows(2).all(|w| w[1] - w[0] > 0.05)
    })
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_filter("away from zero", |v: &f64| v.abs() > 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_points_match_companion_roots(roots in distinct_roots(-2.0, 2.0, 4), scale in nonzero(-3.0, 3.0), n in 3usize..8) {
        let f = ResponseFunction::from_roots(scale, &roots.iter().map(|&r| (r, 2)).collect::<Vec<_>>()).unwrap();
        let ps = PlaneSystem::new(n, f.clone(), -1.0, -1.0, 0.1).unwrap();
        let found = ps.singular_points((-3.0, 3.0));
        let expected: Vec<f64> = companion_real_roots(&f.derivative(1).polynomial().coeffs_f64())
            .into_iter()
            .filter(|x| (-3.0..=3.0).contains(x))
            .collect();
        prop_assert_eq!(found.len(), expected.len(), "{:?} vs {:?}", found, expected);
        for (a, b) in found.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn classification_matches_two_sided_scan(h in nonzero(-2.0, 2.0), h_tilde in -2.0f64..2.0, n in 3usize..9) {
        prop_assume!((h * (n as f64 - 1.0) + h_tilde).abs() > 0.05);
        let ps = PlaneSystem::new(n, ResponseFunction::double_well(), h, h_tilde, 0.1).unwrap();
        let dk = (n as f64 - 1.0) * h + h_tilde;
        for r in ps.singularities((-2.0, 2.0)).unwrap() {
            // the point the flow visits first lies on the side of increasing k when k decreases
            let d = 1e-4 * dk.signum();
            let before = ps.consensus_stability(r.x_s - d).stability;
            let after = ps.consensus_stability(r.x_s + d).stability;
            let expected = match (before, after) {
                (Stability::Attracting, Stability::Repelling) => SingularityType::Type1,
                (Stability::Repelling, Stability::Attracting) => SingularityType::Type2,
                _ => SingularityType::Degenerate,
            };
            prop_assert_eq!(r.sing_type, expected);
        }
    }

    #[test]
    fn lambda_matches_closed_form(h in nonzero(-2.0, 2.0), h_tilde in -2.0f64..2.0, n in 3usize..9) {
        let m = n as f64 - 1.0;
        prop_assume!((h_tilde + m * h).abs() > 0.05);
        let ps = PlaneSystem::new(n, ResponseFunction::double_well(), h, h_tilde, 0.1).unwrap();
        for r in ps.singularities((-2.0, 2.0)).unwrap() {
            let rho = f64::from(r.rho.unwrap());
            let expected = -rho * (h + m * h_tilde) / (h_tilde + m * h);
            let lambda = r.lambda.unwrap();
            prop_assert!((lambda - expected).abs() <= 1e-9 * (1.0 + expected.abs()), "{} vs {}", lambda, expected);
            prop_assert_eq!(r.canard, r.sing_type == SingularityType::Type1 && (lambda - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn critical_perturbation_gives_unit_lambda(h in nonzero(-2.0, 2.0), n in 3usize..9) {
        let ps = PlaneSystem::new(n, ResponseFunction::double_well(), h, h, 0.1).unwrap();
        for r in ps.singularities((-2.0, 2.0)).unwrap() {
            let expected = if r.sing_type == SingularityType::Type1 { 1.0 } else { -1.0 };
            prop_assert_eq!(r.lambda, Some(expected));
        }
    }

    #[test]
    fn divergence_is_additive_and_odd_for_even_responses(a in -3.0f64..0.0, b in 0.0f64..3.0, n in 3usize..7) {
        let ps = PlaneSystem::new(n, ResponseFunction::double_well(), -1.0, -1.0, 0.1).unwrap();
        let i = |k1, k2| ps.slow_divergence_integral(k1, k2, 1e-12).unwrap();
        let whole = i(a, b);
        let split = i(a, 0.0).integral + i(0.0, b).integral;
        prop_assert!((whole.integral - split).abs() <= 1e-9 * (1.0 + split.abs()));
        prop_assert!((whole.integral - whole.exact.unwrap()).abs() <= 1e-9 * (1.0 + whole.integral.abs()));
        prop_assert!(i(-b, b).exact_rational.unwrap().is_zero());
    }

    #[test]
    fn complete_graph_flow_is_equivariant_exactly(n in 2usize..7, seed in any::<u64>(), xs in prop::collection::vec(-3.0f64..3.0, 7)) {
        let mut rng = alf::rng::SeededRng::new(seed);
        let p = Permutation::new(rng.permutation(n)).unwrap();
        let sys = PerturbedSystem::new(
            Graph::complete(n).unwrap(),
            ResponseField::homogeneous(ResponseFunction::double_well()),
            Perturbation::uniform(n, 0.7).unwrap(),
            0.2,
        ).unwrap();
        let x: Vec<BigRational> = xs[..n].iter().map(|&v| BigRational::from_float(v).unwrap()).collect();
        prop_assert!(equivariance_defect(&sys, &p, &x).unwrap().iter().all(Zero::is_zero));
    }

    #[test]
    fn unperturbed_field_sums_to_zero(n in 2usize..9, seed in any::<u64>(), xs in prop::collection::vec(-2.0f64..2.0, 9)) {
        let g = Graph::complete(n).unwrap().with_random_weights(seed, 0.5, 5.0).unwrap();
        let sys = PerturbedSystem::unperturbed(g, ResponseField::homogeneous(ResponseFunction::double_well()));
        let x: Vec<BigRational> = xs[..n].iter().map(|&v| BigRational::from_float(v).unwrap()).collect();
        let v = sys.vector_field_in(&x).unwrap();
        prop_assert!(v.iter().fold(BigRational::zero(), |a, b| a + b).is_zero());
    }

    #[test]
    fn orbits_partition_nodes_and_cyclic_fix_is_consensus(n in 2usize..12) {
        let g = PermutationGroup::cyclic(n).unwrap();
        prop_assert_eq!(g.order(GROUP_CAP).unwrap(), n);
        prop_assert!(fixed_point_space(&g, n).unwrap().is_consensus());
        let swap = PermutationGroup::new(n, vec![Permutation::transposition(n, 0, n - 1).unwrap()]).unwrap();
        let orbits = swap.orbits();
        prop_assert_eq!(orbits.iter().map(Vec::len).sum::<usize>(), n);
        prop_assert_eq!(fixed_point_space(&swap, n).unwrap().dim(), n - 1);
    }

    #[test]
    fn random_weights_are_reproducible(n in 2usize..10, seed in any::<u64>()) {
        let a = Graph::complete(n).unwrap().with_random_weights(seed, 1.0, 5.0).unwrap();
        let b = Graph::complete(n).unwrap().with_random_weights(seed, 1.0, 5.0).unwrap();
        prop_assert!(a.edges().eq(b.edges()));
        prop_assert!(a.edges().all(|(_, _, w)| (1.0..=5.0).contains(&w)));
    }
}
