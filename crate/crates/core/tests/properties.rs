use bifrac_core::grid::{cube_average, lq_norm};
use bifrac_core::lab::{audit_witness, witness_pair};
use bifrac_core::oscillation::mean_oscillation;
use bifrac_core::{Cube, ExponentConfig, GridSpec, SampledFunction};
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::centered(1, 4.0, 64).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 64)
}

/// Dyadic-aligned cube with side `k·h`, placed at node offset `start`.
fn cube() -> impl Strategy<Value = Cube> {
    (1usize..=16, 0usize..48).prop_map(|(k, start)| {
        let g = grid();
        let side = 2.0 * k as f64 * g.h();
        let lo = g.origin()[0] + start as f64 * g.h();
        Cube::new(vec![lo + side / 2.0], side).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn average_shifts_with_constants(v in values(), c in -5.0..5.0f64, q in cube()) {
        let b = SampledFunction::new(grid(), v).unwrap();
        let lhs = cube_average(&b.add_constant(c), &q).unwrap();
        let rhs = cube_average(&b, &q).unwrap() + c;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        let osc = mean_oscillation(&b.add_constant(c), &q).unwrap();
        prop_assert!((osc - mean_oscillation(&b, &q).unwrap()).abs() <= 1e-12 * (1.0 + osc));
    }

    #[test]
    fn norms_are_homogeneous(v in values(), lambda in -4.0..4.0f64, p in 1.0..6.0f64) {
        let f = SampledFunction::new(grid(), v).unwrap();
        let lhs = lq_norm(&f.scale(lambda), p, None).unwrap();
        let rhs = lambda.abs() * lq_norm(&f, p, None).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn witness_invariants(v in values(), q in cube(), p1 in 2.5..6.0f64, p2 in 2.5..6.0f64) {
        let cfg = ExponentConfig::new(1, 0.2, p1, p2).unwrap();
        let b = SampledFunction::new(grid(), v).unwrap();
        let w = witness_pair(&b, &q, &cfg);
        prop_assume!(w.is_ok());
        let w = w.unwrap();
        let audit = audit_witness(&b, &w, &cfg).unwrap();
        prop_assert!(audit.mean_error <= 1e-12);
        prop_assert_eq!(audit.support_violations, 0);
        prop_assert_eq!(audit.sign_violations, 0);
        prop_assert_eq!(audit.amplitude_violations, 0);
        prop_assert!(audit.pairing_error <= 1e-10);
        prop_assert!(audit.c0_in_open_unit_interval);
    }

    #[test]
    fn tail_exponent_identity(alpha in 0.05..0.9f64, p1 in 1.2..8.0f64, p2 in 1.2..8.0f64) {
        let cfg = ExponentConfig::new(1, alpha, p1, p2);
        prop_assume!(cfg.is_ok());
        let cfg = cfg.unwrap();
        let (n, p) = (1.0, cfg.p());
        let lhs = (n - alpha) * cfg.q();
        let rhs = (n - alpha) / (n - p * alpha) * n * p;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }
}
