mod common;

use common::{max_abs, normal_vector, random_grid, rng, sym_eigenvalues};
use nalgebra::DVector;
use proptest::prelude::*;
use sparse_pspline_core::{log_grid, SplineOrder, SplineSystem};

fn system(seed: u64, n: usize, m: usize) -> SplineSystem {
    let mut r = rng(seed);
    SplineSystem::new(random_grid(&mut r, n), SplineOrder::new(m).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn influence_fixes_nullspace_and_is_a_shrinker(
        seed in any::<u64>(),
        ni in 0usize..3,
        m in 1usize..=3,
        log_lambda in -6.0f64..0.0,
    ) {
        let n = [10, 50, 200][ni];
        let sys = system(seed, n, m);
        let lambda = 10f64.powf(log_lambda);
        let a = sys.influence_matrix(lambda).unwrap();
        prop_assert!(max_abs(&(&a * sys.s() - sys.s())) < 1e-8);
        prop_assert!(max_abs(&(&a - a.transpose())) < 1e-8);
        let ev = sym_eigenvalues(&a);
        prop_assert!(ev[0] >= -1e-8 && ev[n - 1] <= 1.0 + 1e-8);
    }

    #[test]
    fn trace_decreases_in_lambda(seed in any::<u64>(), ni in 0usize..3, m in 1usize..=3) {
        let n = [10, 50, 200][ni];
        let sys = system(seed, n, m);
        let traces: Vec<f64> = log_grid(1e-8, 10.0, 25)
            .iter()
            .map(|&l| sys.trace_influence(l).unwrap())
            .collect();
        for w in traces.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        prop_assert!(traces[0] <= n as f64 + 1e-9);
        prop_assert!(*traces.last().unwrap() >= m as f64 - 1e-9);
    }

    #[test]
    fn smooth_matches_matrix_product(seed in any::<u64>(), m in 1usize..=3) {
        let sys = system(seed, 60, m);
        let a = sys.influence_matrix(1e-4).unwrap();
        let mut r = rng(seed ^ 0x5a5a);
        for _ in 0..5 {
            let v = normal_vector(&mut r, 60);
            let out = sys.smooth(1e-4, &v).unwrap();
            prop_assert!((&out.fitted - &a * &v).amax() < 1e-8);
            prop_assert!((sys.s().tr_mul(&out.c)).amax() < 1e-8);
            let again = sys.s() * &out.b + sys.sigma() * &out.c;
            prop_assert!((&again - &out.fitted).amax() < 1e-8);
        }
    }
}

#[test]
fn exactly_m_unit_eigenvalues() {
    for m in 1..=3 {
        for (seed, n) in [(1u64, 10usize), (2, 50), (3, 200)] {
            let sys = system(seed, n, m);
            let a = sys.influence_matrix(1e-2).unwrap();
            let ones = sym_eigenvalues(&a)
                .iter()
                .filter(|&&e| (e - 1.0).abs() < 1e-8)
                .count();
            assert_eq!(ones, m, "n={n} m={m}");
        }
    }
}

#[test]
fn hundred_random_residuals() {
    let sys = system(7, 80, 2);
    let a = sys.influence_matrix(3e-5).unwrap();
    let mut r = rng(11);
    for _ in 0..100 {
        let v = normal_vector(&mut r, 80);
        let out = sys.smooth(3e-5, &v).unwrap();
        assert!((&out.fitted - &a * &v).amax() < 1e-8);
    }
}

#[test]
fn interpolation_limit() {
    // tiny lambda: A(lambda) y -> y for a smooth signal
    let n = 40;
    let t: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let grid = sparse_pspline_core::KnotGrid::new(t.clone()).unwrap();
    let sys = SplineSystem::new(grid, SplineOrder::new(2).unwrap()).unwrap();
    let y = DVector::from_iterator(n, t.iter().map(|&v| (2.0 * std::f64::consts::PI * v).sin()));
    let out = sys.smooth(1e-12, &y).unwrap();
    assert!((&out.fitted - &y).amax() < 1e-4);
}

#[test]
fn spline_evaluation_matches_fitted_at_knots() {
    let sys = system(5, 30, 2);
    let mut r = rng(9);
    let v = normal_vector(&mut r, 30);
    let out = sys.smooth(1e-3, &v).unwrap();
    for (i, &ti) in sys.grid().as_slice().iter().enumerate() {
        let f = sys.evaluate_spline(&out.b, &out.c, ti).unwrap();
        assert!((f - out.fitted[i]).abs() < 1e-10);
    }
}
