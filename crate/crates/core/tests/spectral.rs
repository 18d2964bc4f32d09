use approx::assert_relative_eq;
use critfield::{apply_semigroup, forward_transform, inverse_transform, sample_white_noise, RealField, TorusGrid};
use proptest::prelude::*;

fn field(n: usize, seed: u64) -> RealField {
    let grid = TorusGrid::new(3.0, n).unwrap();
    sample_white_noise(&grid, seed, 0).eta
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_roundtrip(seed in 0u64..1000, half_n in 4usize..48) {
        let f = field(2 * half_n, seed);
        let back = inverse_transform(&forward_transform(&f)).unwrap();
        prop_assert!(back.max_abs_diff(&f).unwrap() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn semigroup_composes(seed in 0u64..1000, s in 0.0f64..0.5, t in 0.0f64..0.5, m in -1.0f64..1.0) {
        let f = field(32, seed);
        let once = apply_semigroup(&f, s + t, m).unwrap();
        let twice = apply_semigroup(&apply_semigroup(&f, s, m).unwrap(), t, m).unwrap();
        prop_assert!(once.max_abs_diff(&twice).unwrap() <= 1e-11 * f.max_abs());
    }

    #[test]
    fn semigroup_scales_the_mean(seed in 0u64..1000, t in 0.0f64..2.0, m in -1.0f64..1.0) {
        let f = field(16, seed);
        let g = apply_semigroup(&f, t, m).unwrap();
        let expected = f.mean() * (m * t).exp();
        prop_assert!((g.mean() - expected).abs() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn semigroup_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, t in 0.0f64..1.0) {
        let f = field(16, 1);
        let g = field(16, 2);
        let lhs = apply_semigroup(&f.combine(a, &g, b).unwrap(), t, 0.3).unwrap();
        let rhs = apply_semigroup(&f, t, 0.3).unwrap().combine(a, &apply_semigroup(&g, t, 0.3).unwrap(), b).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-11 * (f.max_abs() + g.max_abs()));
    }
}

#[test]
fn semigroup_contracts_sup_norm_and_keeps_sign() {
    let grid = TorusGrid::new(2.0, 64).unwrap();
    let bump = RealField::from_fn(grid, |x, y| (-(x - 1.0).powi(2) - (y - 1.0).powi(2)).exp()).unwrap();
    let smooth = apply_semigroup(&bump, 0.05, 0.0).unwrap();
    assert!(smooth.max_abs() <= bump.max_abs());
    assert!(smooth.values().iter().all(|v| *v > -1e-12));
    assert_relative_eq!(smooth.mean(), bump.mean(), max_relative = 1e-12);
}

#[test]
fn zero_time_is_identity() {
    let f = field(32, 9);
    assert_eq!(apply_semigroup(&f, 0.0, 0.0).unwrap().max_abs_diff(&f).unwrap(), 0.0);
}
