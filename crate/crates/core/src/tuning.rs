//! Smoothing and shrinkage parameter selection.
//!
//! The default is two-stage: `lambda1` minimizes the partial-spline GCV score,
//! then `lambda2` minimizes `BIC = RSS / sigma2_hat + log(n) * (#nonzero)` over
//! the breakpoints and segment midpoints of the LASSO path. A joint GCV over
//! `(lambda1, lambda2)` based on the LQA hat matrix is also available.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::path::{LassoPath, TransformedProblem};
use crate::psa::{Profile, PsFit, PsaFit, WeightScheme};
use crate::smoother::{SpectralSmoother, SplineSystem};

/// `k` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let (a, b) = (libm::log10(lo), libm::log10(hi));
            (0..k)
                .map(|i| libm::pow(10.0, a + (b - a) * i as f64 / (k - 1) as f64))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lambda2Grid {
    /// Path breakpoints and segment midpoints.
    PathBreakpoints,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuningMode {
    TwoStage,
    JointGcv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningConfig {
    pub lambda1_grid: Vec<f64>,
    pub lambda2_grid: Lambda2Grid,
    pub weights: WeightScheme,
    pub mode: TuningMode,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            lambda1_grid: log_grid(1e-8, 10.0, 40),
            lambda2_grid: Lambda2Grid::PathBreakpoints,
            weights: WeightScheme::Adaptive { gamma: 1.0 },
            mode: TuningMode::TwoStage,
        }
    }
}

impl TuningConfig {
    pub fn validate(&self) -> Result<()> {
        check_grid(&self.lambda1_grid, true)?;
        if let Lambda2Grid::Explicit(g) = &self.lambda2_grid {
            check_grid(g, false)?;
        }
        if let WeightScheme::Adaptive { gamma } = self.weights {
            if !(gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "gamma must be positive",
                });
            }
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64], strictly_positive: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid { what: "grid is empty" });
    }
    if grid.iter().any(|&v| !v.is_finite() || v < 0.0 || (strictly_positive && v == 0.0)) {
        return Err(Error::InvalidGrid {
            what: "grid values must be finite and positive",
        });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid {
            what: "grid must be strictly increasing",
        });
    }
    Ok(())
}

/// GCV(lambda1) evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GcvCurve {
    pub lambda1_star: f64,
    pub points: Vec<(f64, f64)>,
    /// Grid values where `1 - tr(A~)/n <= 0` and the score is undefined.
    pub skipped: Vec<f64>,
}

/// BIC(lambda2) over the candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct BicCurve {
    pub lambda2_star: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointGcv {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `(lambda1, lambda2, score)`
    pub surface: Vec<(f64, f64, f64)>,
    pub skipped: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedFit {
    pub fit: PsaFit,
    pub initial: PsFit,
    pub lambda1_star: f64,
    pub lambda2_star: f64,
    pub sigma2_hat: f64,
    pub gcv_curve: Vec<(f64, f64)>,
    pub bic_curve: Vec<(f64, f64)>,
}

/// Minimizer of `points` with ties resolved to the smallest `lambda`.
fn argmin(points: &[(f64, f64)]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &(lam, score) in points {
        match best {
            Some((bl, bs)) if score > bs || (score == bs && lam >= bl) => {}
            _ => best = Some((lam, score)),
        }
    }
    best.map(|b| b.0)
}

/// Partial-spline quantities for many `lambda1` from one eigendecomposition.
struct SpectralProfile {
    spectral: SpectralSmoother,
    /// `P' X`
    px: DMatrix<f64>,
    /// `P' y`
    py: DVector<f64>,
    n: usize,
    d: usize,
}

struct PsSummary {
    rss: f64,
    trace_full: f64,
}

impl SpectralProfile {
    fn new(sys: &SplineSystem, data: &Dataset) -> Self {
        let spectral = sys.spectral();
        let px = spectral.basis().tr_mul(data.x());
        let py = spectral.basis().tr_mul(data.y());
        Self {
            spectral,
            px,
            py,
            n: data.n(),
            d: data.d(),
        }
    }

    /// RSS of the partial spline and the trace of its full hat operator
    /// `X G^-1 X'(I-A) + A (I - X G^-1 X'(I-A))`, `G = X'(I-A)X`.
    fn summarize(&self, lambda1: f64) -> Result<PsSummary> {
        let h = self.spectral.shrinkage(lambda1);
        let trace_a = self.n as f64 - h.sum();
        if self.d == 0 {
            let rss = self.py.iter().zip(h.iter()).map(|(p, hk)| (hk * p) * (hk * p)).sum();
            return Ok(PsSummary {
                rss,
                trace_full: trace_a,
            });
        }
        // rows of P'X scaled by h and by h(1-h)
        let mut hpx = self.px.clone();
        let mut h2px = self.px.clone();
        for (k, &hk) in h.iter().enumerate() {
            let mut r = hpx.row_mut(k);
            r *= hk;
            let mut r2 = h2px.row_mut(k);
            r2 *= hk * (1.0 - hk);
        }
        let mut g = self.px.tr_mul(&hpx);
        crate::linalg::symmetrize(&mut g);
        let scale = g.diagonal().amax();
        let chol = cholesky(g).ok_or(Error::CollinearDesign)?;
        let l = chol.l_dirty();
        if (0..self.d).any(|k| !(l[(k, k)] * l[(k, k)] > 1e-12 * scale)) {
            return Err(Error::CollinearDesign);
        }
        let beta = chol.solve(&hpx.tr_mul(&self.py));
        let e = &self.py - &self.px * &beta;
        let rss = e.iter().zip(h.iter()).map(|(ek, hk)| (hk * ek) * (hk * ek)).sum();
        let mut cross = self.px.tr_mul(&h2px);
        crate::linalg::symmetrize(&mut cross);
        let correction = chol.solve(&cross).trace();
        Ok(PsSummary {
            rss,
            trace_full: trace_a + self.d as f64 - correction,
        })
    }
}

fn gcv_score(rss: f64, trace: f64, n: usize) -> Option<f64> {
    let n = n as f64;
    let denom = 1.0 - trace / n;
    if denom <= 1e-10 {
        None
    } else {
        Some((rss / n) / (denom * denom))
    }
}

/// Two-stage step one: `lambda1* = argmin GCV(lambda1)`.
pub fn gcv_lambda1(sys: &SplineSystem, data: &Dataset, grid: &[f64]) -> Result<GcvCurve> {
    check_grid(grid, true)?;
    let sp = SpectralProfile::new(sys, data);
    let mut points = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for &lam in grid {
        let s = sp.summarize(lam)?;
        match gcv_score(s.rss, s.trace_full, data.n()) {
            Some(score) if score.is_finite() => points.push((lam, score)),
            _ => skipped.push(lam),
        }
    }
    let lambda1_star = argmin(&points).ok_or(Error::InvalidGrid {
        what: "GCV undefined at every grid point",
    })?;
    Ok(GcvCurve {
        lambda1_star,
        points,
        skipped,
    })
}

/// Residual variance of the partial spline: `RSS / (n - tr A(lambda1) - d)`.
pub fn sigma2_hat(sys: &SplineSystem, data: &Dataset, lambda1: f64) -> Result<f64> {
    let prof = Profile::new(sys, data, lambda1)?;
    let ps = prof.partial_spline()?;
    sigma2_from_fit(data, &ps)
}

pub fn sigma2_from_fit(data: &Dataset, ps: &PsFit) -> Result<f64> {
    let denom = data.n() as f64 - ps.trace_a - data.d() as f64;
    if !(denom > 0.0) {
        return Err(Error::InsufficientDf(denom));
    }
    Ok((data.y() - &ps.fitted).norm_squared() / denom)
}

/// Two-stage step two: `lambda2* = argmin BIC(lambda2)` along a LASSO path.
pub fn bic_lambda2(
    profile: &Profile<'_>,
    tp: &TransformedProblem,
    path: &LassoPath,
    sigma2: f64,
    grid: &Lambda2Grid,
) -> Result<BicCurve> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter {
            what: "sigma2 must be positive",
        });
    }
    let candidates = match grid {
        Lambda2Grid::PathBreakpoints => path.candidates(),
        Lambda2Grid::Explicit(g) => {
            check_grid(g, false)?;
            g.clone()
        }
    };
    let log_n = libm::log(profile.data().n() as f64);
    let points: Vec<(f64, f64)> = candidates
        .iter()
        .map(|&lam| {
            let beta = tp.back_transform(&path.solve_at(lam));
            let r = beta.iter().filter(|&&b| b != 0.0).count();
            (lam, profile.rss(&beta) / sigma2 + log_n * r as f64)
        })
        .collect();
    let lambda2_star = argmin(&points).ok_or(Error::InvalidGrid {
        what: "no lambda2 candidates",
    })?;
    Ok(BicCurve {
        lambda2_star,
        points,
    })
}

/// GCV over the product grid using `tr M(lambda1, lambda2)` from the LQA hat matrix.
pub fn joint_gcv(
    sys: &SplineSystem,
    data: &Dataset,
    grid1: &[f64],
    grid2: &[f64],
    scheme: WeightScheme,
) -> Result<JointGcv> {
    check_grid(grid1, true)?;
    check_grid(grid2, false)?;
    let n = data.n();
    let mut surface = Vec::new();
    let mut skipped = Vec::new();
    for &l1 in grid1 {
        let prof = Profile::new(sys, data, l1)?;
        let initial = prof.partial_spline()?;
        let scales = scheme.scales(&initial.beta_tilde);
        let weights: Vec<f64> = scales
            .iter()
            .map(|&s| if s == 0.0 { f64::INFINITY } else { 1.0 / s })
            .collect();
        let (tp, path) = prof.lasso_path(&scales)?;
        for &l2 in grid2 {
            let beta = tp.back_transform(&path.solve_at(l2));
            let fit = prof.finish(beta, &initial, l2, scheme)?;
            let (_, m) = prof.lqa_hat_matrix(l2, &fit.beta_hat, &weights)?;
            let rss = (data.y() - &fit.fitted).norm_squared();
            match gcv_score(rss, m.trace(), n) {
                Some(score) if score.is_finite() => surface.push((l1, l2, score)),
                _ => skipped.push((l1, l2)),
            }
        }
    }
    // ties: smaller lambda1, then smaller lambda2
    let best = surface
        .iter()
        .copied()
        .fold(None::<(f64, f64, f64)>, |acc, p| match acc {
            Some(a) if p.2 > a.2 || (p.2 == a.2 && (p.0, p.1) >= (a.0, a.1)) => Some(a),
            _ => Some(p),
        })
        .ok_or(Error::InvalidGrid {
            what: "GCV undefined at every grid point",
        })?;
    Ok(JointGcv {
        lambda1: best.0,
        lambda2: best.1,
        surface,
        skipped,
    })
}

/// Select `(lambda1, lambda2)` and fit.
pub fn tune(sys: &SplineSystem, data: &Dataset, config: &TuningConfig) -> Result<TunedFit> {
    config.validate()?;
    match config.mode {
        TuningMode::TwoStage => {
            let gcv = gcv_lambda1(sys, data, &config.lambda1_grid)?;
            let prof = Profile::new(sys, data, gcv.lambda1_star)?;
            let initial = prof.partial_spline()?;
            let sigma2 = sigma2_from_fit(data, &initial)?;
            let scales = config.weights.scales(&initial.beta_tilde);
            let (tp, path) = prof.lasso_path(&scales)?;
            let bic = bic_lambda2(&prof, &tp, &path, sigma2, &config.lambda2_grid)?;
            let beta = tp.back_transform(&path.solve_at(bic.lambda2_star));
            let fit = prof.finish(beta, &initial, bic.lambda2_star, config.weights)?;
            Ok(TunedFit {
                fit,
                initial,
                lambda1_star: gcv.lambda1_star,
                lambda2_star: bic.lambda2_star,
                sigma2_hat: sigma2,
                gcv_curve: gcv.points,
                bic_curve: bic.points,
            })
        }
        TuningMode::JointGcv => {
            let grid2 = match &config.lambda2_grid {
                Lambda2Grid::Explicit(g) => g.clone(),
                Lambda2Grid::PathBreakpoints => {
                    return Err(Error::InvalidGrid {
                        what: "joint GCV needs an explicit lambda2 grid",
                    })
                }
            };
            let joint = joint_gcv(sys, data, &config.lambda1_grid, &grid2, config.weights)?;
            let prof = Profile::new(sys, data, joint.lambda1)?;
            let initial = prof.partial_spline()?;
            let sigma2 = sigma2_from_fit(data, &initial)?;
            let fit = prof.fit(joint.lambda2, config.weights, Some(&initial))?;
            let gcv_curve = joint
                .surface
                .iter()
                .filter(|p| p.1 == joint.lambda2)
                .map(|p| (p.0, p.2))
                .collect();
            Ok(TunedFit {
                fit,
                initial,
                lambda1_star: joint.lambda1,
                lambda2_star: joint.lambda2,
                sigma2_hat: sigma2,
                gcv_curve,
                bic_curve: Vec::new(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-8, 10.0, 40);
        assert_eq!(g.len(), 40);
        assert!((g[0] - 1e-8).abs() < 1e-20);
        assert!((g[39] - 10.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn argmin_prefers_smaller_lambda_on_ties() {
        assert_eq!(argmin(&[(0.3, 1.0), (0.1, 1.0), (0.2, 2.0)]), Some(0.1));
        assert_eq!(argmin(&[]), None);
    }

    #[test]
    fn grid_validation() {
        assert!(check_grid(&[], true).is_err());
        assert!(check_grid(&[0.0, 1.0], true).is_err());
        assert!(check_grid(&[0.0, 1.0], false).is_ok());
        assert!(check_grid(&[1.0, 0.5], true).is_err());
        let mut cfg = TuningConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.weights = WeightScheme::Adaptive { gamma: -1.0 };
        assert!(cfg.validate().is_err());
    }
}
