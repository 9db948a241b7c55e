//! Weighted-LASSO reformulation of the profiled objective and its solution path.
//!
//! Profiling out `f` leaves `(1/n)(y - X b)'(I - A)(y - X b) + lambda2 * sum w_j |b_j|`.
//! With `I - A = T'T`, `y* = T y`, `X* = T X W` and `W = diag(|beta_tilde_j|^gamma)`
//! this is the plain LASSO
//!
//! ```text
//! (1/n) ||y* - X* b*||^2 + lambda2 * sum |b*_j|
//! ```
//!
//! solved here by homotopy (LARS with the LASSO modification) and, independently,
//! by cyclic coordinate descent.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, symmetrize};

/// Symmetric square root of a PSD matrix.
#[derive(Debug, Clone)]
pub struct PsdRoot {
    pub root: DMatrix<f64>,
    pub min_eigenvalue: f64,
    /// Eigenvalues that were negative beyond `1e-8` and clamped to zero.
    pub clamped: usize,
}

/// Symmetric `T` with `T'T = M`, via eigendecomposition.
///
/// Eigenvalues in `[-1e-6, 0)` are clamped to zero; anything more negative is an error.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<PsdRoot> {
    if !m.is_square() {
        return Err(Error::Shape {
            what: "square matrix required",
        });
    }
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -1e-6 {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    let clamped = eig.eigenvalues.iter().filter(|&&v| v < -1e-8).count();
    let mut scaled = eig.eigenvectors.clone();
    for (mut col, &v) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= libm::sqrt(v.max(0.0));
    }
    let mut root = scaled * eig.eigenvectors.transpose();
    symmetrize(&mut root);
    Ok(PsdRoot {
        root,
        min_eigenvalue: if m.nrows() == 0 { 0.0 } else { min_eigenvalue },
        clamped,
    })
}

/// The LASSO problem in transformed coordinates.
#[derive(Debug, Clone)]
pub struct TransformedProblem {
    pub y_star: DVector<f64>,
    pub x_star: DMatrix<f64>,
    /// Original column index of each column of `x_star`.
    pub active_map: Vec<usize>,
    /// `|beta_tilde_j|^gamma` for each retained column.
    pub scales: Vec<f64>,
    /// Number of original predictors.
    pub d: usize,
}

impl TransformedProblem {
    /// A problem given directly in LASSO form with unit scales.
    pub fn from_parts(y_star: DVector<f64>, x_star: DMatrix<f64>) -> Result<Self> {
        if y_star.len() != x_star.nrows() {
            return Err(Error::Shape {
                what: "y* and X* row counts differ",
            });
        }
        let p = x_star.ncols();
        Ok(Self {
            y_star,
            x_star,
            active_map: (0..p).collect(),
            scales: vec![1.0; p],
            d: p,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y_star.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x_star.ncols()
    }

    /// `max_j (2/n) |x*_j' y*|`; the solution is zero for every `lambda2` at or above it.
    pub fn lambda_max(&self) -> f64 {
        let n = self.n() as f64;
        self.x_star.tr_mul(&self.y_star).amax() * 2.0 / n
    }

    /// Map a transformed solution back to the original `d` coefficients.
    ///
    /// Dropped predictors are exactly zero.
    pub fn back_transform(&self, beta_star: &DVector<f64>) -> DVector<f64> {
        let mut beta = DVector::zeros(self.d);
        for ((&j, &s), &b) in self.active_map.iter().zip(&self.scales).zip(beta_star.iter()) {
            if b != 0.0 {
                beta[j] = b * s;
            }
        }
        beta
    }

    /// `(1/n) ||y* - X* b||^2 + lambda2 ||b||_1`.
    pub fn objective(&self, beta_star: &DVector<f64>, lambda2: f64) -> f64 {
        let r = &self.y_star - &self.x_star * beta_star;
        r.norm_squared() / self.n() as f64 + lambda2 * beta_star.lp_norm(1)
    }
}

/// Build `y* = T y` and `X* = T X W` with `T` the symmetric root of `I - A`.
pub fn transform(
    dataset: &Dataset,
    a: &DMatrix<f64>,
    weights_scale: &[f64],
) -> Result<TransformedProblem> {
    let n = dataset.n();
    if a.shape() != (n, n) {
        return Err(Error::Shape {
            what: "influence matrix does not match the dataset",
        });
    }
    let resid = DMatrix::<f64>::identity(n, n) - a;
    let root = psd_sqrt(&resid)?;
    transform_with_root(dataset, &root.root, weights_scale)
}

/// As [`transform`] but with a precomputed root `T`.
pub fn transform_with_root(
    dataset: &Dataset,
    t: &DMatrix<f64>,
    weights_scale: &[f64],
) -> Result<TransformedProblem> {
    let n = dataset.n();
    let d = dataset.d();
    if t.shape() != (n, n) {
        return Err(Error::Shape {
            what: "square-root matrix does not match the dataset",
        });
    }
    if weights_scale.len() != d {
        return Err(Error::Shape {
            what: "weight scales must have one entry per predictor",
        });
    }
    if weights_scale.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter {
            what: "weight scales must be finite and non-negative",
        });
    }
    let active_map: Vec<usize> = (0..d).filter(|&j| weights_scale[j] > 0.0).collect();
    let scales: Vec<f64> = active_map.iter().map(|&j| weights_scale[j]).collect();
    let x = dataset.x();
    let mut xw = DMatrix::zeros(n, active_map.len());
    for (k, (&j, &s)) in active_map.iter().zip(&scales).enumerate() {
        xw.column_mut(k).copy_from(&(x.column(j) * s));
    }
    Ok(TransformedProblem {
        y_star: t * dataset.y(),
        x_star: t * xw,
        active_map,
        scales,
        d,
    })
}

/// Piecewise-linear LASSO solution path in `lambda2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    /// Decreasing `lambda2` values; the first is `lambda_max`, the last is 0.
    pub breakpoints: Vec<f64>,
    /// Coefficients (transformed scale) at each breakpoint.
    pub coefs: Vec<DVector<f64>>,
    /// Active set on the segment `[breakpoints[k+1], breakpoints[k]]`.
    pub active_sets: Vec<Vec<usize>>,
    /// Signs matching `active_sets`.
    pub signs: Vec<Vec<i8>>,
}

impl LassoPath {
    pub fn lambda_max(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn p(&self) -> usize {
        self.coefs[0].len()
    }

    /// Coefficients at an arbitrary `lambda2 >= 0` by linear interpolation.
    pub fn solve_at(&self, lambda2: f64) -> DVector<f64> {
        let bp = &self.breakpoints;
        if lambda2 >= bp[0] {
            return DVector::zeros(self.p());
        }
        let last = bp.len() - 1;
        if lambda2 <= bp[last] {
            return self.coefs[last].clone();
        }
        // bp is decreasing: find k with bp[k] > lambda2 >= bp[k+1]
        let k = bp.partition_point(|&b| b > lambda2) - 1;
        let (hi, lo) = (bp[k], bp[k + 1]);
        if lambda2 == lo {
            return self.coefs[k + 1].clone();
        }
        let w = (hi - lambda2) / (hi - lo);
        let mut out = &self.coefs[k] * (1.0 - w) + &self.coefs[k + 1] * w;
        // variables inactive on this segment stay exactly zero
        let active = &self.active_sets[k];
        for j in 0..out.len() {
            if !active.contains(&j) {
                out[j] = 0.0;
            }
        }
        out
    }

    /// Breakpoints plus segment midpoints, in decreasing order.
    pub fn candidates(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.breakpoints.len());
        for w in self.breakpoints.windows(2) {
            out.push(w[0]);
            out.push(0.5 * (w[0] + w[1]));
        }
        out.push(*self.breakpoints.last().unwrap());
        out
    }
}

enum Event {
    End,
    Enter(usize, f64),
    Drop(usize),
}

/// LASSO-modified LARS homotopy for `(1/n)||y* - X* b||^2 + lambda2 ||b||_1`.
///
/// Internally works with `alpha = n * lambda2 / 2`, the correlation level of the
/// active set. Ties in entry are broken by the lower index.
pub fn lars_path(tp: &TransformedProblem) -> Result<LassoPath> {
    let n = tp.n();
    let p = tp.p();
    if n == 0 {
        return Err(Error::InsufficientData {
            what: "LASSO path needs at least one observation",
        });
    }
    let to_lambda = 2.0 / n as f64;
    let gram = tp.x_star.tr_mul(&tp.x_star);
    let xty = tp.x_star.tr_mul(&tp.y_star);

    let mut beta = DVector::<f64>::zeros(p);
    let corr = |beta: &DVector<f64>| &xty - &gram * beta;

    let mut alpha = if p == 0 { 0.0 } else { xty.amax() };
    let mut path = LassoPath {
        breakpoints: vec![tp.lambda_max()],
        coefs: vec![beta.clone()],
        active_sets: Vec::new(),
        signs: Vec::new(),
    };
    if alpha <= 0.0 {
        // zero design or zero response: the path is identically zero
        return Ok(path);
    }

    let eps = 1e-13 * alpha;
    let first = (0..p).find(|&j| xty[j].abs() >= alpha - eps).unwrap();
    let mut active: Vec<usize> = vec![first];
    let mut signs: Vec<f64> = vec![xty[first].signum()];
    // variable just dropped and its former sign; its same-sign entry root is the zero step just taken
    let mut blocked: Option<(usize, f64)> = None;
    let max_steps = 50 * (p + 1) + 1000;

    for _ in 0..max_steps {
        let k = active.len();
        let mut g_aa = DMatrix::zeros(k, k);
        for (r, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate() {
                g_aa[(r, c)] = gram[(i, j)];
            }
        }
        let s_a = DVector::from_column_slice(&signs);
        let direction = cholesky(g_aa)
            .map(|ch| ch.solve(&s_a))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::DegenerateDirection {
                indices: active.iter().map(|&j| tp.active_map[j]).collect(),
            })?;

        // a_j = x_j' X_A d: rate of change of correlations per unit decrease of alpha
        let mut a = DVector::zeros(p);
        for (r, &i) in active.iter().enumerate() {
            a.axpy(direction[r], &gram.column(i), 1.0);
        }
        let c = corr(&beta);

        let mut step = alpha;
        let mut event = Event::End;
        for j in 0..p {
            if active.contains(&j) {
                continue;
            }
            for (num, den, sign) in [(alpha - c[j], 1.0 - a[j], 1.0), (alpha + c[j], 1.0 + a[j], -1.0)] {
                if den <= 1e-12 || blocked == Some((j, sign)) {
                    continue;
                }
                let g = num / den;
                if g > eps && g < step {
                    step = g;
                    event = Event::Enter(j, sign);
                }
            }
        }
        for (r, &i) in active.iter().enumerate() {
            let dr = direction[r];
            if dr == 0.0 {
                continue;
            }
            let g = -beta[i] / dr;
            if g > eps && g < step {
                step = g;
                event = Event::Drop(i);
            }
        }

        for (r, &i) in active.iter().enumerate() {
            beta[i] += step * direction[r];
        }
        path.active_sets.push(active.clone());
        path.signs
            .push(signs.iter().map(|&s| if s > 0.0 { 1 } else { -1 }).collect());

        match event {
            Event::End => {
                path.breakpoints.push(0.0);
                path.coefs.push(beta.clone());
                return Ok(path);
            }
            Event::Enter(j, sign) => {
                alpha -= step;
                active.push(j);
                signs.push(sign);
                blocked = None;
            }
            Event::Drop(i) => {
                alpha -= step;
                beta[i] = 0.0;
                let pos = active.iter().position(|&v| v == i).unwrap();
                active.remove(pos);
                let old = signs.remove(pos);
                blocked = Some((i, old));
            }
        }
        path.breakpoints.push(alpha.max(0.0) * to_lambda);
        path.coefs.push(beta.clone());
        if alpha <= eps {
            return Ok(path);
        }
        if active.is_empty() {
            // can only happen after dropping the sole variable; restart from the max correlation
            let c = corr(&beta);
            let top = (0..p)
                .filter(|&j| blocked.map(|b| b.0) != Some(j))
                .max_by(|&x, &y| c[x].abs().partial_cmp(&c[y].abs()).unwrap().then(y.cmp(&x)));
            match top {
                Some(j) => {
                    active.push(j);
                    signs.push(c[j].signum());
                }
                None => return Ok(path),
            }
        }
    }
    Err(Error::IllConditioned {
        what: "LARS did not terminate",
    })
}

/// Coordinate descent for the transformed LASSO at a single `lambda2`.
///
/// Converged when the largest coefficient change in a sweep is below `1e-10`.
pub fn cd_solve(tp: &TransformedProblem, lambda2: f64) -> Result<DVector<f64>> {
    cd_solve_with(tp, lambda2, 1e-10, 100_000)
}

pub fn cd_solve_with(
    tp: &TransformedProblem,
    lambda2: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<DVector<f64>> {
    if !(lambda2 >= 0.0) {
        return Err(Error::NegativeLambda(lambda2));
    }
    let n = tp.n() as f64;
    let p = tp.p();
    let gram = tp.x_star.tr_mul(&tp.x_star);
    let xty = tp.x_star.tr_mul(&tp.y_star);
    let mut beta = DVector::<f64>::zeros(p);
    // grad_j = x_j' (y - X beta), kept up to date through the Gram matrix
    let mut grad = xty.clone();
    let thresh = n * lambda2 / 2.0;

    let mut last_change = f64::INFINITY;
    for _ in 0..max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let gjj = gram[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let z = grad[j] + gjj * beta[j];
            let new = soft_threshold(z, thresh) / gjj;
            let delta = new - beta[j];
            if delta != 0.0 {
                grad.axpy(-delta, &gram.column(j), 1.0);
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        last_change = max_change;
        if max_change < tol {
            return Ok(beta);
        }
    }
    Err(Error::IterationsExceeded {
        sweeps: max_sweeps,
        last_change,
        kkt: kkt_residual(tp, &beta, lambda2),
    })
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Largest violation of the subgradient optimality conditions.
pub fn kkt_residual(tp: &TransformedProblem, beta_star: &DVector<f64>, lambda2: f64) -> f64 {
    let n = tp.n() as f64;
    let r = &tp.y_star - &tp.x_star * beta_star;
    let g = tp.x_star.tr_mul(&r) * (2.0 / n);
    g.iter()
        .zip(beta_star.iter())
        .map(|(&gj, &bj)| {
            if bj != 0.0 {
                (gj - lambda2 * bj.signum()).abs()
            } else {
                (gj.abs() - lambda2).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
