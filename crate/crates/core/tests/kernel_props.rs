mod common;

use common::{random_grid, rng, sym_eigenvalues};
use proptest::prelude::*;
use sparse_pspline_core::{
    gram_matrix, nullspace_matrix, reproducing_kernel, scaled_bernoulli, SplineOrder,
};

/// Bernoulli numbers from `sum_{k<=n} C(n+1, k) B_k = 0`.
fn bernoulli_numbers(max: usize) -> Vec<f64> {
    let mut b = vec![1.0];
    for n in 1..=max {
        let mut acc = 0.0;
        for (k, bk) in b.iter().enumerate() {
            acc += binom(n + 1, k) * bk;
        }
        b.push(-acc / (n + 1) as f64);
    }
    b
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, i| a * i as f64)
}

/// `B_nu(t) / nu!` from `B_nu(t) = sum_k C(nu, k) B_k t^(nu-k)`.
fn oracle_k(nu: usize, t: f64) -> f64 {
    let b = bernoulli_numbers(nu);
    (0..=nu)
        .map(|k| binom(nu, k) * b[k] * t.powi((nu - k) as i32))
        .sum::<f64>()
        / factorial(nu)
}

fn simpson(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn bernoulli_numbers_known() {
    let b = bernoulli_numbers(8);
    assert!((b[1] + 0.5).abs() < 1e-15);
    assert!((b[2] - 1.0 / 6.0).abs() < 1e-15);
    assert!((b[4] + 1.0 / 30.0).abs() < 1e-15);
    assert!((b[8] + 1.0 / 30.0).abs() < 1e-14);
}

#[test]
fn scaled_bernoulli_integrates_to_zero() {
    for nu in 1..=8 {
        let i = simpson(|t| scaled_bernoulli(nu, t).unwrap(), 2000);
        assert!(i.abs() < 1e-9, "nu={nu}: {i}");
    }
}

#[test]
fn order_range() {
    assert!(SplineOrder::new(0).is_err());
    assert!(SplineOrder::new(5).is_err());
    assert!(scaled_bernoulli(9, 0.5).is_err());
    assert!(scaled_bernoulli(2, 1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bernoulli_matches_recurrence(nu in 0usize..=8, t in 0.0f64..=1.0) {
        let got = scaled_bernoulli(nu, t).unwrap();
        prop_assert!((got - oracle_k(nu, t)).abs() < 1e-12);
    }

    #[test]
    fn kernel_symmetric(s in 0.0f64..=1.0, t in 0.0f64..=1.0, m in 1usize..=4) {
        let order = SplineOrder::new(m).unwrap();
        let a = reproducing_kernel(s, t, order).unwrap();
        let b = reproducing_kernel(t, s, order).unwrap();
        prop_assert!((a - b).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gram_psd_and_nullspace_rank(seed in any::<u64>(), ni in 0usize..3, m in 1usize..=3) {
        let n = [10, 50, 200][ni];
        let mut r = rng(seed);
        let grid = random_grid(&mut r, n);
        let order = SplineOrder::new(m).unwrap();
        let sigma = gram_matrix(&grid, order);
        prop_assert!(sym_eigenvalues(&sigma)[0] >= -1e-10);
        let s = nullspace_matrix(&grid, order);
        prop_assert_eq!(s.shape(), (n, m));
        prop_assert_eq!(s.clone().svd(false, false).rank(1e-10), m);
    }
}
