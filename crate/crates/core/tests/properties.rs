use proptest::prelude::*;

use subgauss::bodies::BodySpec;
use subgauss::construction::{make_grid, target_count};
use subgauss::moments::{LpEvaluator, ProjectedSample, QuadratureEvaluator};
use subgauss::rng::{Domain, Streams};
use subgauss::sampling::sphere_point;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadrature_norm_is_homogeneous(p in 1.0f64..12.0, lambda in 0.1f64..10.0, i in 0usize..4) {
        let body = BodySpec::cube(4).unwrap();
        let mut y = vec![0.0; 4];
        y[i] = 1.0;
        let ev = QuadratureEvaluator::new(&body, None);
        let a = ev.norms(&y, &[p]).unwrap()[0].value;
        let scaled: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        let b = ev.norms(&scaled, &[p]).unwrap()[0].value;
        prop_assert!((b - lambda * a).abs() <= 1e-8 * b.max(1.0));
    }

    #[test]
    fn lp_norms_increase_with_p(seed in any::<u64>(), p in 1.0f64..6.0, dp in 0.1f64..4.0) {
        let mut rng = Streams::new(seed, Domain::Check).stream(0);
        let xs: Vec<f64> = (0..2000).map(|_| sphere_point(3, &mut rng)[0]).collect();
        let s = ProjectedSample::new(&xs, seed);
        prop_assume!(p + dp <= s.p_max());
        let a = s.lp(p).unwrap().value;
        let b = s.lp(p + dp).unwrap().value;
        prop_assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn grid_is_dyadic_and_bounded(n in 2usize..400) {
        match make_grid(n, 0.25, 4.0, 0.05) {
            Ok(g) => {
                prop_assert_eq!(g.exponents[0], 1.0);
                for w in g.exponents.windows(2) {
                    prop_assert_eq!(w[1], 2.0 * w[0]);
                }
                prop_assert!(g.exponents.iter().all(|&p| 0.25 * n as f64 >= p));
                prop_assert!(g.inner_threshold(2.0, 1.0) < g.outer_threshold(2.0, 1.0));
            }
            Err(_) => prop_assert!(n < 4),
        }
    }

    #[test]
    fn target_count_is_the_ceiling(n in 1usize..500) {
        let m = target_count(n, 0.9);
        prop_assert!(m as f64 >= 0.9 * n as f64 - 1e-9 && (m as f64) < 0.9 * n as f64 + 1.0);
    }

    #[test]
    fn sphere_points_are_unit(seed in any::<u64>(), n in 1usize..50) {
        let v = sphere_point(n, &mut Streams::new(seed, Domain::Sphere).stream(0));
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((r - 1.0).abs() < 1e-12);
    }
}
