//! Smoothing-spline influence matrix and representer coefficients.
//!
//! With `S = [F1 F2] [U; 0]` and `V = Sigma + n*lambda*I`,
//!
//! ```text
//! A(lambda) = I - n*lambda * F2 (F2' V F2)^-1 F2'
//! c         = F2 (F2' V F2)^-1 F2' r
//! b         = U^-1 F1' (r - Sigma c)
//! ```
//!
//! and the fitted values at the knots are `S b + Sigma c = A(lambda) r`.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel::{
    bernoulli_unchecked as bern, check_unit, gram_matrix, kernel_unchecked, nullspace_matrix,
    KnotGrid, SplineOrder,
};
use crate::linalg::{cholesky, full_qr, solve_upper, symmetrize};

/// Per-grid precomputation shared by every smoothing parameter.
#[derive(Debug, Clone)]
pub struct SplineSystem {
    grid: KnotGrid,
    order: SplineOrder,
    s: DMatrix<f64>,
    sigma: DMatrix<f64>,
    f1: DMatrix<f64>,
    f2: DMatrix<f64>,
    u: DMatrix<f64>,
    /// `F2' Sigma F2`
    reduced_gram: DMatrix<f64>,
}

/// Output of [`SplineSystem::smooth`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherOutput {
    pub fitted: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub trace_a: f64,
}

/// QR-factorize the null-space matrix and cache the kernel Gram matrix.
pub fn factorize(grid: &KnotGrid, order: SplineOrder) -> Result<SplineSystem> {
    SplineSystem::new(grid.clone(), order)
}

impl SplineSystem {
    pub fn new(grid: KnotGrid, order: SplineOrder) -> Result<Self> {
        let n = grid.len();
        let m = order.get();
        if n <= m {
            return Err(Error::InsufficientData {
                what: "need more knots than the spline order",
            });
        }
        let s = nullspace_matrix(&grid, order);
        let sigma = gram_matrix(&grid, order);
        let (q, u) = full_qr(&s);

        let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if (0..m).any(|k| u[(k, k)].abs() <= 1e-10 * scale.max(1.0)) {
            return Err(Error::DegenerateKnots);
        }

        let f1 = q.columns(0, m).clone_owned();
        let f2 = q.columns(m, n - m).clone_owned();
        let mut reduced_gram = f2.tr_mul(&(&sigma * &f2));
        symmetrize(&mut reduced_gram);

        Ok(Self {
            grid,
            order,
            s,
            sigma,
            f1,
            f2,
            u,
            reduced_gram,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn order(&self) -> SplineOrder {
        self.order
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn f1(&self) -> &DMatrix<f64> {
        &self.f1
    }

    pub fn f2(&self) -> &DMatrix<f64> {
        &self.f2
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Factorize `F2' V F2` for one smoothing parameter.
    pub fn at(&self, lambda1: f64) -> Result<Smoother<'_>> {
        if !(lambda1 > 0.0) || !lambda1.is_finite() {
            return Err(Error::NonPositiveLambda(lambda1));
        }
        let nl = self.n() as f64 * lambda1;
        let mut inner = self.reduced_gram.clone();
        for k in 0..inner.nrows() {
            inner[(k, k)] += nl;
        }
        let chol = cholesky(inner).ok_or(Error::IllConditioned {
            what: "F2'(Sigma + n lambda I)F2 is not positive definite",
        })?;
        Ok(Smoother {
            sys: self,
            lambda1,
            nl,
            chol,
        })
    }

    /// Influence matrix `A(lambda1)`, materialized.
    pub fn influence_matrix(&self, lambda1: f64) -> Result<DMatrix<f64>> {
        Ok(self.at(lambda1)?.influence_matrix())
    }

    /// Apply the smoother to a residual vector.
    pub fn smooth(&self, lambda1: f64, r: &DVector<f64>) -> Result<SmootherOutput> {
        let sm = self.at(lambda1)?;
        let mut out = sm.apply(r)?;
        out.trace_a = sm.trace();
        Ok(out)
    }

    /// `tr A(lambda1)`, the effective degrees of freedom of the smoother.
    pub fn trace_influence(&self, lambda1: f64) -> Result<f64> {
        Ok(self.at(lambda1)?.trace())
    }

    /// Evaluate `sum_nu b_nu k_nu(t) + sum_i c_i K(t, t_i)`.
    pub fn evaluate_spline(&self, b: &DVector<f64>, c: &DVector<f64>, t_new: f64) -> Result<f64> {
        check_unit(t_new)?;
        let m = self.order.get();
        if b.len() != m || c.len() != self.n() {
            return Err(Error::Shape {
                what: "spline coefficients do not match the system",
            });
        }
        let poly: f64 = (0..m).map(|nu| b[nu] * bern(nu, t_new)).sum();
        let kern: f64 = self
            .grid
            .as_slice()
            .iter()
            .zip(c.iter())
            .map(|(&ti, &ci)| ci * kernel_unchecked(t_new, ti, m))
            .sum();
        Ok(poly + kern)
    }

    /// Eigendecompose `F2' Sigma F2` once so that any `lambda1` can be applied in `O(n^2)`.
    pub fn spectral(&self) -> SpectralSmoother {
        let eig = SymmetricEigen::new(self.reduced_gram.clone());
        let basis = &self.f2 * &eig.eigenvectors;
        let eigenvalues = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        SpectralSmoother {
            n: self.n(),
            m: self.order.get(),
            basis,
            eigenvalues,
        }
    }
}

/// Smoother at a fixed `lambda1` backed by a Cholesky factor of `F2' V F2`.
#[derive(Debug, Clone)]
pub struct Smoother<'a> {
    sys: &'a SplineSystem,
    lambda1: f64,
    nl: f64,
    chol: Cholesky<f64, Dyn>,
}

impl<'a> Smoother<'a> {
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn system(&self) -> &'a SplineSystem {
        self.sys
    }

    /// Representer coefficients and fitted values for residual `r`.
    pub fn apply(&self, r: &DVector<f64>) -> Result<SmootherOutput> {
        let sys = self.sys;
        if r.len() != sys.n() {
            return Err(Error::Shape {
                what: "residual length differs from number of knots",
            });
        }
        let z = sys.f2.tr_mul(r);
        let w = self.chol.solve(&z);
        let c = &sys.f2 * w;
        let rest = r - &sys.sigma * &c;
        let b = solve_upper(&sys.u, &sys.f1.tr_mul(&rest)).ok_or(Error::DegenerateKnots)?;
        let fitted = &sys.s * &b + &sys.sigma * &c;
        Ok(SmootherOutput {
            fitted,
            b,
            c,
            trace_a: f64::NAN,
        })
    }

    pub fn influence_matrix(&self) -> DMatrix<f64> {
        let sys = self.sys;
        let n = sys.n();
        let z = self.chol.solve(&sys.f2.transpose());
        let mut a = DMatrix::<f64>::identity(n, n) - (&sys.f2 * z) * self.nl;
        symmetrize(&mut a);
        a
    }

    /// `tr A = n - n*lambda * tr (F2' V F2)^-1`.
    pub fn trace(&self) -> f64 {
        let n = self.sys.n();
        let k = n - self.sys.order.get();
        let l = self.chol.l();
        let mut inv_l = DMatrix::<f64>::identity(k, k);
        l.solve_lower_triangular_mut(&mut inv_l);
        n as f64 - self.nl * inv_l.norm_squared()
    }
}

/// Influence matrices for many `lambda1` values from one eigendecomposition.
///
/// With `F2' Sigma F2 = Q diag(mu) Q'` and `P = F2 Q`,
/// `I - A(lambda1) = P diag(h) P'` where `h_k = n*lambda1 / (mu_k + n*lambda1)`.
#[derive(Debug, Clone)]
pub struct SpectralSmoother {
    n: usize,
    m: usize,
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl SpectralSmoother {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `n x (n - m)` orthonormal basis `P`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Eigenvalues of `I - A(lambda1)` on the columns of `P`.
    pub fn shrinkage(&self, lambda1: f64) -> DVector<f64> {
        let nl = self.n as f64 * lambda1;
        DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&mu| nl / (mu + nl)),
        )
    }

    pub fn trace(&self, lambda1: f64) -> f64 {
        self.n as f64 - self.shrinkage(lambda1).sum()
    }

    /// `I - A(lambda1)`.
    pub fn residual_operator(&self, lambda1: f64) -> DMatrix<f64> {
        self.weighted_gram(&self.shrinkage(lambda1))
    }

    /// Symmetric square root of `I - A(lambda1)`.
    pub fn residual_sqrt(&self, lambda1: f64) -> DMatrix<f64> {
        self.weighted_gram(&self.shrinkage(lambda1).map(libm::sqrt))
    }

    pub fn influence_matrix(&self, lambda1: f64) -> DMatrix<f64> {
        DMatrix::<f64>::identity(self.n, self.n) - self.residual_operator(lambda1)
    }

    fn weighted_gram(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.basis.clone();
        for (mut col, &wk) in scaled.column_iter_mut().zip(w.iter()) {
            col *= wk;
        }
        let mut out = scaled * self.basis.transpose();
        symmetrize(&mut out);
        out
    }

    pub fn order(&self) -> usize {
        self.m
    }
}

/// Free-function form of [`SplineSystem::influence_matrix`].
pub fn influence_matrix(sys: &SplineSystem, lambda1: f64) -> Result<DMatrix<f64>> {
    sys.influence_matrix(lambda1)
}

/// Free-function form of [`SplineSystem::smooth`].
pub fn smooth(sys: &SplineSystem, lambda1: f64, r: &DVector<f64>) -> Result<SmootherOutput> {
    sys.smooth(lambda1, r)
}

/// Free-function form of [`SplineSystem::evaluate_spline`].
pub fn evaluate_spline(
    sys: &SplineSystem,
    b: &DVector<f64>,
    c: &DVector<f64>,
    t_new: f64,
) -> Result<f64> {
    sys.evaluate_spline(b, c, t_new)
}

/// Free-function form of [`SplineSystem::trace_influence`].
pub fn trace_influence(sys: &SplineSystem, lambda1: f64) -> Result<f64> {
    sys.trace_influence(lambda1)
}
