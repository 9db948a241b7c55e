#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparse_pspline_core::{Dataset, KnotGrid, TransformedProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sorted, distinct uniform points in `[0, 1]`.
pub fn random_grid(rng: &mut impl Rng, n: usize) -> KnotGrid {
    loop {
        let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        t.sort_by(f64::total_cmp);
        if t.windows(2).all(|w| w[1] - w[0] > 1e-6) {
            return KnotGrid::new(t).unwrap();
        }
    }
}

pub fn normal_matrix(rng: &mut impl Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn normal_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `y = X beta + sin(2 pi t) + noise * e` on a standardized design.
pub fn partial_linear(
    rng: &mut impl Rng,
    n: usize,
    beta: &[f64],
    noise: f64,
) -> Dataset {
    let d = beta.len();
    let x = normal_matrix(rng, n, d);
    let t = random_grid(rng, n).as_slice().to_vec();
    let b = DVector::from_column_slice(beta);
    let mut y = &x * &b;
    for i in 0..n {
        y[i] += (2.0 * std::f64::consts::PI * t[i]).sin() + noise * rng.sample::<f64, _>(StandardNormal);
    }
    Dataset::new(x, t, y).unwrap()
}

pub fn random_lasso(rng: &mut impl Rng, n: usize, p: usize) -> TransformedProblem {
    let x = normal_matrix(rng, n, p);
    let mut beta = DVector::zeros(p);
    for j in 0..p.min(3) {
        beta[j] = 2.0 - j as f64 * 0.5;
    }
    let y = &x * &beta + normal_vector(rng, n) * 0.5;
    TransformedProblem::from_parts(y, x).unwrap()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}
