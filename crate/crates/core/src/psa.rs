//! The four-step PSA estimator and its local quadratic approximation.
//!
//! 1. Partial-spline fit `beta_tilde` at `lambda1`.
//! 2. Adaptive weights `w_j = 1/|beta_tilde_j|^gamma` and the weighted-LASSO path.
//! 3. Back-transform `beta_j = beta*_j |beta_tilde_j|^gamma`.
//! 4. Spline refit on `y - X beta`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::path::{lars_path, psd_sqrt, transform_with_root, LassoPath, TransformedProblem};
use crate::smoother::{Smoother, SmootherOutput, SplineSystem};

/// Unpenalized-in-beta partial spline fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PsFit {
    pub beta_tilde: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub lambda1: f64,
    pub trace_a: f64,
    pub fitted: DVector<f64>,
}

/// Output of [`psa_fit`]. Coefficients are on the standardized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PsaFit {
    pub beta_hat: DVector<f64>,
    pub beta_tilde: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    /// Penalty weights; `f64::INFINITY` marks predictors excluded by a zero initial estimate.
    pub weights: Vec<f64>,
    pub active_set: Vec<usize>,
    pub fitted: DVector<f64>,
}

impl PsaFit {
    /// `f_hat` at the knots.
    pub fn spline_fitted(&self, data: &Dataset) -> DVector<f64> {
        &self.fitted - data.x() * &self.beta_hat
    }
}

/// Penalty weights for the linear coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    /// `w_j = 1/|beta_tilde_j|^gamma`.
    Adaptive { gamma: f64 },
    /// `w_j = 1` (plain LASSO penalty).
    Unit,
}

impl WeightScheme {
    /// `|beta_tilde_j|^gamma`, the column scale used in the transformed problem.
    pub fn scales(&self, beta_tilde: &DVector<f64>) -> Vec<f64> {
        match *self {
            WeightScheme::Adaptive { gamma } => beta_tilde
                .iter()
                .map(|&b| {
                    if b == 0.0 {
                        0.0
                    } else {
                        libm::pow(b.abs(), gamma)
                    }
                })
                .collect(),
            WeightScheme::Unit => alloc::vec![1.0; beta_tilde.len()],
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            WeightScheme::Adaptive { gamma } => gamma,
            WeightScheme::Unit => 0.0,
        }
    }
}

/// `w_j = 1/|beta_tilde_j|^gamma`; a zero initial estimate gives an infinite weight.
pub fn adaptive_weights(beta_tilde: &DVector<f64>, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter {
            what: "gamma must be positive",
        });
    }
    Ok(WeightScheme::Adaptive { gamma }
        .scales(beta_tilde)
        .into_iter()
        .map(|s| if s == 0.0 { f64::INFINITY } else { 1.0 / s })
        .collect())
}

/// Everything that depends on `(data, lambda1)` but not on `lambda2`.
#[derive(Debug, Clone)]
pub struct Profile<'a> {
    data: &'a Dataset,
    smoother: Smoother<'a>,
    influence: DMatrix<f64>,
    /// `I - A(lambda1)`
    resid: DMatrix<f64>,
    /// `(I - A) X`
    resid_x: DMatrix<f64>,
}

impl<'a> Profile<'a> {
    pub fn new(sys: &'a SplineSystem, data: &'a Dataset, lambda1: f64) -> Result<Self> {
        if sys.n() != data.n() || sys.grid() != data.t() {
            return Err(Error::Shape {
                what: "spline system was built for different knots",
            });
        }
        let smoother = sys.at(lambda1)?;
        let influence = smoother.influence_matrix();
        let n = data.n();
        let resid = DMatrix::<f64>::identity(n, n) - &influence;
        let resid_x = &resid * data.x();
        Ok(Self {
            data,
            smoother,
            influence,
            resid,
            resid_x,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.smoother.lambda1()
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn system(&self) -> &'a SplineSystem {
        self.smoother.system()
    }

    pub fn influence(&self) -> &DMatrix<f64> {
        &self.influence
    }

    pub fn residual_operator(&self) -> &DMatrix<f64> {
        &self.resid
    }

    pub fn smooth(&self, r: &DVector<f64>) -> Result<SmootherOutput> {
        self.smoother.apply(r)
    }

    /// `(y - X beta)' (I - A) (y - X beta)`, equal to the residual sum of squares of the refit.
    pub fn rss(&self, beta: &DVector<f64>) -> f64 {
        let r = self.data.y() - self.data.x() * beta;
        let e = &self.resid * r;
        e.norm_squared()
    }

    fn normal_matrix(&self) -> DMatrix<f64> {
        let mut g = self.data.x().tr_mul(&self.resid_x);
        crate::linalg::symmetrize(&mut g);
        g
    }

    pub fn partial_spline(&self) -> Result<PsFit> {
        let data = self.data;
        let d = data.d();
        let beta_tilde = if d == 0 {
            DVector::zeros(0)
        } else {
            let g = self.normal_matrix();
            let rhs = self.resid_x.tr_mul(data.y());
            solve_spd(g, &rhs)?
        };
        let spline = self.smooth(&(data.y() - data.x() * &beta_tilde))?;
        let fitted = data.x() * &beta_tilde + &spline.fitted;
        Ok(PsFit {
            beta_tilde,
            b: spline.b,
            c: spline.c,
            lambda1: self.lambda1(),
            trace_a: self.influence.trace(),
            fitted,
        })
    }

    /// Symmetric root `T` of `I - A`.
    pub fn residual_root(&self) -> Result<DMatrix<f64>> {
        Ok(psd_sqrt(&self.resid)?.root)
    }

    /// Steps 2 and 3 up to the path: the transformed problem and its LARS path.
    pub fn lasso_path(&self, weights_scale: &[f64]) -> Result<(TransformedProblem, LassoPath)> {
        let root = self.residual_root()?;
        self.lasso_path_with_root(&root, weights_scale)
    }

    pub fn lasso_path_with_root(
        &self,
        root: &DMatrix<f64>,
        weights_scale: &[f64],
    ) -> Result<(TransformedProblem, LassoPath)> {
        let tp = transform_with_root(self.data, root, weights_scale)?;
        let path = lars_path(&tp)?;
        Ok((tp, path))
    }

    /// Step 4 for a given coefficient vector.
    pub fn finish(
        &self,
        beta_hat: DVector<f64>,
        initial: &PsFit,
        lambda2: f64,
        scheme: WeightScheme,
    ) -> Result<PsaFit> {
        let data = self.data;
        let spline = self.smooth(&(data.y() - data.x() * &beta_hat))?;
        let fitted = data.x() * &beta_hat + &spline.fitted;
        let weights = scheme
            .scales(&initial.beta_tilde)
            .into_iter()
            .map(|s| if s == 0.0 { f64::INFINITY } else { 1.0 / s })
            .collect();
        let active_set = (0..beta_hat.len()).filter(|&j| beta_hat[j] != 0.0).collect();
        Ok(PsaFit {
            beta_hat,
            beta_tilde: initial.beta_tilde.clone(),
            b: spline.b,
            c: spline.c,
            lambda1: self.lambda1(),
            lambda2,
            gamma: scheme.gamma(),
            weights,
            active_set,
            fitted,
        })
    }

    /// Steps 1-4 at one `lambda2`.
    pub fn fit(
        &self,
        lambda2: f64,
        scheme: WeightScheme,
        initial: Option<&PsFit>,
    ) -> Result<PsaFit> {
        if !(lambda2 >= 0.0) {
            return Err(Error::NegativeLambda(lambda2));
        }
        let owned;
        let initial = match initial {
            Some(init) => init,
            None => {
                owned = self.partial_spline()?;
                &owned
            }
        };
        if initial.beta_tilde.len() != self.data.d() {
            return Err(Error::Shape {
                what: "initial estimate has the wrong dimension",
            });
        }
        let scales = scheme.scales(&initial.beta_tilde);
        let (tp, path) = self.lasso_path(&scales)?;
        let beta_hat = tp.back_transform(&path.solve_at(lambda2));
        self.finish(beta_hat, initial, lambda2, scheme)
    }

    /// LQA hat matrices `H` (`d x n`) and `M = X H + A (I - X H)`.
    ///
    /// Coordinates with `beta_ref_j = 0` are held at zero (their rows of `H` vanish).
    /// The quadratic term for coordinate `j` is `n * lambda2 * w_j / |beta_ref_j|`,
    /// which for `gamma = 1` is `n * lambda2 / |beta_tilde_j * beta_ref_j|`.
    pub fn lqa_hat_matrix(
        &self,
        lambda2: f64,
        beta_ref: &DVector<f64>,
        weights: &[f64],
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let data = self.data;
        let (n, d) = (data.n(), data.d());
        if beta_ref.len() != d || weights.len() != d {
            return Err(Error::Shape {
                what: "reference coefficients or weights have the wrong dimension",
            });
        }
        if !(lambda2 >= 0.0) {
            return Err(Error::NegativeLambda(lambda2));
        }
        let keep: Vec<usize> = (0..d)
            .filter(|&j| beta_ref[j] != 0.0 && weights[j].is_finite())
            .collect();
        let mut h = DMatrix::zeros(d, n);
        if !keep.is_empty() {
            let xk = data.x().select_columns(&keep);
            let rxk = self.resid_x.select_columns(&keep);
            let mut inner = xk.tr_mul(&rxk);
            crate::linalg::symmetrize(&mut inner);
            for (r, &j) in keep.iter().enumerate() {
                inner[(r, r)] += n as f64 * lambda2 * weights[j] / beta_ref[j].abs();
            }
            let chol = cholesky(inner).ok_or(Error::IllConditioned {
                what: "LQA system is singular",
            })?;
            let hk = chol.solve(&rxk.transpose());
            for (r, &j) in keep.iter().enumerate() {
                h.row_mut(j).copy_from(&hk.row(r));
            }
        }
        let xh = data.x() * &h;
        let m = &xh + &self.influence * (DMatrix::<f64>::identity(n, n) - &xh);
        Ok((h, m))
    }
}

fn solve_spd(g: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    // relative pivot check catches numerically singular designs that Cholesky still accepts
    let scale = g.diagonal().amax();
    let chol = cholesky(g).ok_or(Error::CollinearDesign)?;
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows()).map(|k| l[(k, k)] * l[(k, k)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * scale) {
        return Err(Error::CollinearDesign);
    }
    Ok(chol.solve(rhs))
}

/// Partial spline estimate at `lambda1`.
pub fn partial_spline(sys: &SplineSystem, data: &Dataset, lambda1: f64) -> Result<PsFit> {
    if data.n() <= data.d() + sys.order().get() {
        return Err(Error::InsufficientData {
            what: "need n > d + m observations",
        });
    }
    Profile::new(sys, data, lambda1)?.partial_spline()
}

/// Run the four-step PSA algorithm at fixed `(lambda1, lambda2)`.
pub fn psa_fit(
    sys: &SplineSystem,
    data: &Dataset,
    lambda1: f64,
    lambda2: f64,
    gamma: f64,
    initial: Option<&PsFit>,
) -> Result<PsaFit> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter {
            what: "gamma must be positive",
        });
    }
    Profile::new(sys, data, lambda1)?.fit(lambda2, WeightScheme::Adaptive { gamma }, initial)
}

/// `X_new beta_hat + f_hat(t_new)` for standardized `x_new` rows.
pub fn predict(
    fit: &PsaFit,
    sys: &SplineSystem,
    x_new: &DMatrix<f64>,
    t_new: &[f64],
) -> Result<DVector<f64>> {
    if x_new.nrows() != t_new.len() || x_new.ncols() != fit.beta_hat.len() {
        return Err(Error::Shape {
            what: "prediction inputs do not match the fit",
        });
    }
    let lin = x_new * &fit.beta_hat;
    let mut out = DVector::zeros(t_new.len());
    for (i, &t) in t_new.iter().enumerate() {
        out[i] = lin[i] + sys.evaluate_spline(&fit.b, &fit.c, t)?;
    }
    Ok(out)
}

/// Free-function form of [`Profile::lqa_hat_matrix`] with `gamma = 1`-style weights from `beta_tilde`.
pub fn lqa_hat_matrix(
    sys: &SplineSystem,
    data: &Dataset,
    lambda1: f64,
    lambda2: f64,
    beta_ref: &DVector<f64>,
    beta_tilde: &DVector<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let weights: Vec<f64> = beta_tilde
        .iter()
        .map(|&b| if b == 0.0 { f64::INFINITY } else { 1.0 / b.abs() })
        .collect();
    Profile::new(sys, data, lambda1)?.lqa_hat_matrix(lambda2, beta_ref, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SplineOrder;
    use alloc::vec;

    #[test]
    fn adaptive_weight_examples() {
        let w = adaptive_weights(&DVector::from_vec(vec![2.0, -0.5]), 1.0).unwrap();
        assert_eq!(w, vec![0.5, 2.0]);
        let w = adaptive_weights(&DVector::from_vec(vec![2.0]), 2.0).unwrap();
        assert_eq!(w, vec![0.25]);
        let w = adaptive_weights(&DVector::from_vec(vec![0.0, 1.0]), 1.0).unwrap();
        assert!(w[0].is_infinite());
        assert!(adaptive_weights(&DVector::from_vec(vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn zero_initial_estimate_excluded() {
        let s = WeightScheme::Adaptive { gamma: 1.0 }.scales(&DVector::from_vec(vec![0.0, -3.0]));
        assert_eq!(s, vec![0.0, 3.0]);
        assert_eq!(WeightScheme::Unit.scales(&DVector::zeros(2)), vec![1.0, 1.0]);
    }

    #[test]
    fn lqa_diagonal_example() {
        // D_jj = 1/|beta_tilde_j beta_ref_j| = 1/(2 * 0.5) = 1 enters as n*lambda2*1.
        let n = 12;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let x = DMatrix::from_fn(n, 1, |i, _| ((i * 7) % 5) as f64);
        let y = DVector::from_fn(n, |i, _| (i as f64).sin());
        let data = Dataset::new(x, t, y).unwrap();
        let sys = SplineSystem::new(data.t().clone(), SplineOrder::default()).unwrap();
        let prof = Profile::new(&sys, &data, 1e-3).unwrap();
        let lam2 = 0.1;
        let (h, _) = lqa_hat_matrix(
            &sys,
            &data,
            1e-3,
            lam2,
            &DVector::from_vec(vec![0.5]),
            &DVector::from_vec(vec![2.0]),
        )
        .unwrap();
        let g = data.x().tr_mul(&(prof.residual_operator() * data.x()))[(0, 0)];
        let want = (prof.residual_operator() * data.x()).transpose() / (g + n as f64 * lam2);
        assert!((h - want).amax() < 1e-12);
    }
}
