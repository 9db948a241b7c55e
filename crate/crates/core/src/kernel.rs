//! Order-m Sobolev space ingredients on `[0, 1]`.
//!
//! The space splits into the unpenalized polynomials `k_0, ..., k_{m-1}` and a
//! penalized complement with reproducing kernel
//! `K(s, t) = k_m(s) k_m(t) + (-1)^(m-1) k_{2m}([s - t])`, where
//! `k_nu = B_nu / nu!` are scaled Bernoulli polynomials and `[.]` is the
//! fractional part.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Highest supported smoothness order.
pub const MAX_ORDER: usize = 4;

/// Highest Bernoulli degree with a coefficient table.
pub const MAX_DEGREE: usize = 2 * MAX_ORDER;

/// Coefficients of `B_nu(x)` in ascending powers of `x`.
const BERNOULLI: [&[f64]; MAX_DEGREE + 1] = [
    &[1.0],
    &[-0.5, 1.0],
    &[1.0 / 6.0, -1.0, 1.0],
    &[0.0, 0.5, -1.5, 1.0],
    &[-1.0 / 30.0, 0.0, 1.0, -2.0, 1.0],
    &[0.0, -1.0 / 6.0, 0.0, 5.0 / 3.0, -2.5, 1.0],
    &[1.0 / 42.0, 0.0, -0.5, 0.0, 2.5, -3.0, 1.0],
    &[0.0, 1.0 / 6.0, 0.0, -7.0 / 6.0, 0.0, 3.5, -3.5, 1.0],
    &[-1.0 / 30.0, 0.0, 2.0 / 3.0, 0.0, -7.0 / 3.0, 0.0, 14.0 / 3.0, -4.0, 1.0],
];

const FACTORIAL: [f64; MAX_DEGREE + 1] = [
    1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0,
];

/// Smoothness order `m`; the roughness penalty integrates the squared m-th derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplineOrder(usize);

impl SplineOrder {
    pub fn new(m: usize) -> Result<Self> {
        if (1..=MAX_ORDER).contains(&m) {
            Ok(Self(m))
        } else {
            Err(Error::UnsupportedOrder(m))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for SplineOrder {
    fn default() -> Self {
        Self(2)
    }
}

/// Strictly increasing design points in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid(Vec<f64>);

impl KnotGrid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        for (i, &v) in t.iter().enumerate() {
            check_unit(v)?;
            if i > 0 && v <= t[i - 1] {
                return Err(Error::UnsortedKnots { index: i });
            }
        }
        Ok(Self(t))
    }

    /// Evenly spaced knots `0, 1/(n-1), ..., 1`.
    pub fn uniform(n: usize) -> Self {
        match n {
            0 => Self(Vec::new()),
            1 => Self(alloc::vec![0.0]),
            _ => Self((0..n).map(|i| i as f64 / (n - 1) as f64).collect()),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain { value: t })
    }
}

#[inline]
pub(crate) fn bernoulli_unchecked(nu: usize, t: f64) -> f64 {
    // Horner in ascending-coefficient order.
    BERNOULLI[nu].iter().rev().fold(0.0, |acc, &c| acc * t + c) / FACTORIAL[nu]
}

/// `k_nu(t) = B_nu(t) / nu!` for `nu <= 8` and `t` in `[0, 1]`.
pub fn scaled_bernoulli(nu: usize, t: f64) -> Result<f64> {
    if nu > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(nu));
    }
    check_unit(t)?;
    Ok(bernoulli_unchecked(nu, t))
}

/// Fractional part mapped into `[0, 1)`.
#[inline]
pub(crate) fn frac(x: f64) -> f64 {
    let f = x - libm::floor(x);
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[inline]
pub(crate) fn kernel_unchecked(s: f64, t: f64, m: usize) -> f64 {
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    // frac(s-t) and frac(t-s) sum to 1 and k_{2m}(x) = k_{2m}(1-x), so K is symmetric.
    bernoulli_unchecked(m, s) * bernoulli_unchecked(m, t)
        + sign * bernoulli_unchecked(2 * m, frac(s - t))
}

/// Reproducing kernel of the penalized subspace.
pub fn reproducing_kernel(s: f64, t: f64, order: SplineOrder) -> Result<f64> {
    check_unit(s)?;
    check_unit(t)?;
    Ok(kernel_unchecked(s, t, order.get()))
}

/// Polynomial null-space basis at the knots: entry `(i, nu)` is `k_nu(t_i)`, `n x m`.
pub fn nullspace_matrix(grid: &KnotGrid, order: SplineOrder) -> DMatrix<f64> {
    let t = grid.as_slice();
    DMatrix::from_fn(t.len(), order.get(), |i, nu| bernoulli_unchecked(nu, t[i]))
}

/// Kernel Gram matrix `Sigma_ij = K(t_i, t_j)`.
pub fn gram_matrix(grid: &KnotGrid, order: SplineOrder) -> DMatrix<f64> {
    let t = grid.as_slice();
    let n = t.len();
    let m = order.get();
    let mut sigma = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = kernel_unchecked(t[i], t[j], m);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    sigma
}
