//! Monte Carlo comparison of PS, PSL, PSA and the oracle fit on the
//! simulation designs (Models 1-3).
//!
//! Each replicate draws from its own ChaCha20 stream `(seed, replicate)`, so
//! results do not depend on scheduling. Aggregation runs over replicates in
//! index order after the parallel phase.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sparse_pspline_core::tuning::TuningConfig;
use sparse_pspline_core::{
    gcv_lambda1, log_grid, sigma2_from_fit, Dataset, Lambda2Grid, Profile, PsaFit, SplineOrder, SplineSystem,
    WeightScheme,
};

use crate::report::{MethodSummary, SimulationReport, Stat, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Model1,
    Model2,
    Model3,
    Custom,
}

/// Nonparametric truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionTag {
    /// `1.5 sin(2 pi t)`
    Sine,
    /// `t^10 (1-t)^4 / (3 B(11,5)) + 4 t^4 (1-t)^10 / (15 B(5,11))`
    TwoBumps,
    /// `0.2 t^29 (1-t)^16 / B(30,17) + 0.8 t^2 (1-t)^10 / B(3,11)`
    SkewedBumps,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub tag: FunctionTag,
    pub scale: f64,
}

impl FunctionSpec {
    pub fn eval(&self, t: f64) -> f64 {
        self.scale * self.tag.eval(t)
    }
}

/// `B(u, v)` for positive integers.
pub fn beta_fn(u: u32, v: u32) -> f64 {
    let fact = |k: u32| (1..=k).fold(1.0f64, |acc, i| acc * i as f64);
    fact(u - 1) * fact(v - 1) / fact(u + v - 1)
}

impl FunctionTag {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FunctionTag::Sine => 1.5 * (2.0 * PI * t).sin(),
            FunctionTag::TwoBumps => {
                t.powi(10) * (1.0 - t).powi(4) / (3.0 * beta_fn(11, 5))
                    + 4.0 * t.powi(4) * (1.0 - t).powi(10) / (15.0 * beta_fn(5, 11))
            }
            FunctionTag::SkewedBumps => {
                0.2 * t.powi(29) * (1.0 - t).powi(16) / beta_fn(30, 17)
                    + 0.8 * t.powi(2) * (1.0 - t).powi(10) / beta_fn(3, 11)
            }
            FunctionTag::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XDist {
    IidUniform,
    /// Standard normal margins with `corr(X_i, X_j) = rho^|i-j|`.
    Ar1Gaussian { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrDist {
    Gaussian { sigma: f64 },
    StudentT { df: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelName,
    pub n: usize,
    pub d: usize,
    pub q: usize,
    /// True coefficients on the raw covariate scale.
    pub beta0: Vec<f64>,
    pub f0: FunctionSpec,
    pub x_dist: XDist,
    pub err_dist: ErrDist,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("invalid model spec: {0}")]
    Invalid(&'static str),
}

impl ModelSpec {
    /// `beta = (3, 2.5, 2, 1.5, 0, ..., 0)`, `d = 15`, uniform covariates, `f = 1.5 sin(2 pi t)`.
    pub fn model1(n: usize, sigma: f64, seed: u64) -> Self {
        let mut beta0 = vec![0.0; 15];
        beta0[..4].copy_from_slice(&[3.0, 2.5, 2.0, 1.5]);
        Self {
            name: ModelName::Model1,
            n,
            d: 15,
            q: 4,
            beta0,
            f0: FunctionSpec {
                tag: FunctionTag::Sine,
                scale: 1.0,
            },
            x_dist: XDist::IidUniform,
            err_dist: ErrDist::Gaussian { sigma },
            seed,
        }
    }

    /// Ten coefficients equal to `3 * beta_scale` out of `d = 20`, AR(1) covariates, `t_10` errors.
    pub fn model2(n: usize, rho: f64, beta_scale: f64, seed: u64) -> Self {
        let mut beta0 = vec![0.0; 20];
        beta0[..10].fill(3.0 * beta_scale);
        Self {
            name: ModelName::Model2,
            n,
            d: 20,
            q: 10,
            beta0,
            f0: FunctionSpec {
                tag: FunctionTag::TwoBumps,
                scale: 1.0,
            },
            x_dist: XDist::Ar1Gaussian { rho },
            err_dist: ErrDist::StudentT { df: 10.0 },
            seed,
        }
    }

    /// `d = 60`, `q = 15`, AR(1) covariates with `rho = 0.5`, normal errors.
    pub fn model3(n: usize, sigma: f64, beta_scale: f64, f_scale: f64, seed: u64) -> Self {
        let mut beta0 = vec![0.0; 60];
        for (j, b) in beta0.iter_mut().take(15).enumerate() {
            *b = [4.0, 3.0, 2.0][j / 5] * beta_scale;
        }
        Self {
            name: ModelName::Model3,
            n,
            d: 60,
            q: 15,
            beta0,
            f0: FunctionSpec {
                tag: FunctionTag::SkewedBumps,
                scale: f_scale,
            },
            x_dist: XDist::Ar1Gaussian { rho: 0.5 },
            err_dist: ErrDist::Gaussian { sigma },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.beta0.len() != self.d {
            return Err(SpecError::Invalid("beta0 must have d entries"));
        }
        let nonzero = self.beta0.iter().filter(|&&b| b != 0.0).count();
        if nonzero != self.q || self.beta0[..self.q].contains(&0.0) {
            return Err(SpecError::Invalid(
                "beta0 must have exactly q nonzeros in the leading positions",
            ));
        }
        if self.n < 2 * (self.d + 2) {
            return Err(SpecError::Invalid("n is too small for d"));
        }
        if let XDist::Ar1Gaussian { rho } = self.x_dist {
            if !(0.0..1.0).contains(&rho) {
                return Err(SpecError::Invalid("rho must lie in [0, 1)"));
            }
        }
        match self.err_dist {
            ErrDist::Gaussian { sigma } if !(sigma >= 0.0) => {
                Err(SpecError::Invalid("sigma must be non-negative"))
            }
            ErrDist::StudentT { df } if !(df > 2.0) => {
                Err(SpecError::Invalid("t degrees of freedom must exceed 2"))
            }
            _ => Ok(()),
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.d).filter(|&j| self.beta0[j] != 0.0).collect()
    }

    /// Random stream for one replicate.
    pub fn rng(&self, replicate: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate);
        rng
    }

    /// Draw one dataset. Rows are sorted by `t`; `x` is standardized inside the dataset.
    pub fn generate(&self, replicate: u64) -> Result<Sample, sparse_pspline_core::Error> {
        let mut rng = self.rng(replicate);
        let (n, d) = (self.n, self.d);
        let mut x = DMatrix::<f64>::zeros(n, d);
        let mut t = vec![0.0; n];
        let mut eps = vec![0.0; n];
        let t_dist = match self.err_dist {
            ErrDist::StudentT { df } => Some(StudentT::new(df).expect("df validated")),
            ErrDist::Gaussian { .. } => None,
        };
        for i in 0..n {
            match self.x_dist {
                XDist::IidUniform => {
                    for j in 0..d {
                        x[(i, j)] = rng.random::<f64>();
                    }
                }
                XDist::Ar1Gaussian { rho } => {
                    let innov = (1.0 - rho * rho).sqrt();
                    let mut prev: f64 = StandardNormal.sample(&mut rng);
                    x[(i, 0)] = prev;
                    for j in 1..d {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        prev = rho * prev + innov * z;
                        x[(i, j)] = prev;
                    }
                }
            }
            t[i] = rng.random::<f64>();
            eps[i] = match (self.err_dist, &t_dist) {
                (ErrDist::Gaussian { sigma }, _) => {
                    sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                }
                (_, Some(td)) => td.sample(&mut rng),
                _ => unreachable!(),
            };
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
        let x = x.select_rows(&order);
        let t: Vec<f64> = order.iter().map(|&i| t[i]).collect();
        let eps: Vec<f64> = order.iter().map(|&i| eps[i]).collect();

        let beta0 = DVector::from_column_slice(&self.beta0);
        let lin = &x * &beta0;
        let f_raw: Vec<f64> = t.iter().map(|&ti| self.f0.eval(ti)).collect();
        let y = DVector::from_fn(n, |i, _| lin[i] + f_raw[i] + eps[i]);

        let dataset = Dataset::new(x.clone(), t, y)?;
        let shift = dataset.intercept_shift(&beta0);
        let f_knots = f_raw.iter().map(|v| v + shift).collect();
        Ok(Sample {
            dataset,
            raw_x: x,
            truth: Truth {
                beta0: self.beta0.clone(),
                support: self.support(),
                f_raw,
                f_knots,
                intercept_shift: shift,
            },
        })
    }
}

/// One generated replicate.
#[derive(Debug, Clone)]
pub struct Sample {
    pub dataset: Dataset,
    /// Unstandardized design, same row order as `dataset`.
    pub raw_x: DMatrix<f64>,
    pub truth: Truth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub beta0: Vec<f64>,
    pub support: Vec<usize>,
    /// `f0(t_i)`
    pub f_raw: Vec<f64>,
    /// `f0(t_i)` plus the constant absorbed by centering `x`; the target of `f_hat`.
    pub f_knots: Vec<f64>,
    pub intercept_shift: f64,
}

pub fn gen_model1(n: usize, sigma: f64, seed: u64) -> Result<Sample, sparse_pspline_core::Error> {
    ModelSpec::model1(n, sigma, seed).generate(0)
}

pub fn gen_model2(
    n: usize,
    rho: f64,
    beta_scale: f64,
    seed: u64,
) -> Result<Sample, sparse_pspline_core::Error> {
    ModelSpec::model2(n, rho, beta_scale, seed).generate(0)
}

pub fn gen_model3(
    n: usize,
    sigma: f64,
    beta_scale: f64,
    f_scale: f64,
    seed: u64,
) -> Result<Sample, sparse_pspline_core::Error> {
    ModelSpec::model3(n, sigma, beta_scale, f_scale, seed).generate(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PS")]
    Ps,
    #[serde(rename = "PSL")]
    Psl,
    #[serde(rename = "PSA")]
    Psa,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ps, Method::Psl, Method::Psa, Method::Oracle];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Ps => "PS",
            Method::Psl => "PSL",
            Method::Psa => "PSA",
            Method::Oracle => "Oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ps" => Some(Method::Ps),
            "psl" => Some(Method::Psl),
            "psa" => Some(Method::Psa),
            "oracle" => Some(Method::Oracle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub mse_beta: f64,
    pub mise_f: f64,
    pub size: usize,
    pub correct_zeros: usize,
    pub incorrect_zeros: usize,
    pub exact_support: bool,
    pub per_variable_selected: Vec<bool>,
}

/// A fitted method on one replicate, in a common shape.
#[derive(Debug, Clone)]
pub struct MethodFit {
    pub method: Method,
    /// Standardized-scale coefficients, full length `d`.
    pub beta_hat: DVector<f64>,
    /// `f_hat` at the knots.
    pub f_hat: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl MethodFit {
    fn from_psa(method: Method, fit: &PsaFit, data: &Dataset) -> Self {
        Self {
            method,
            beta_hat: fit.beta_hat.clone(),
            f_hat: fit.spline_fitted(data),
            b: fit.b.clone(),
            c: fit.c.clone(),
            lambda1: fit.lambda1,
            lambda2: fit.lambda2,
        }
    }
}

/// Metrics for one fit: squared error of `beta_hat` on the raw covariate scale,
/// knot-averaged squared error of `f_hat`, and selection counts.
pub fn evaluate_replicate(fit: &MethodFit, truth: &Truth, data: &Dataset) -> ReplicateMetrics {
    let beta = data.to_original_scale(&fit.beta_hat);
    let mse_beta = beta
        .iter()
        .zip(&truth.beta0)
        .map(|(b, t)| (b - t) * (b - t))
        .sum();
    let n = fit.f_hat.len() as f64;
    let mise_f = fit
        .f_hat
        .iter()
        .zip(&truth.f_knots)
        .map(|(f, t)| (f - t) * (f - t))
        .sum::<f64>()
        / n;
    let selected: Vec<bool> = fit.beta_hat.iter().map(|&b| b != 0.0).collect();
    let true_nz: Vec<bool> = truth.beta0.iter().map(|&b| b != 0.0).collect();
    let size = selected.iter().filter(|&&s| s).count();
    let correct_zeros = selected
        .iter()
        .zip(&true_nz)
        .filter(|(s, t)| !**s && !**t)
        .count();
    let incorrect_zeros = selected
        .iter()
        .zip(&true_nz)
        .filter(|(s, t)| !**s && **t)
        .count();
    ReplicateMetrics {
        mse_beta,
        mise_f,
        size,
        correct_zeros,
        incorrect_zeros,
        exact_support: selected == true_nz,
        per_variable_selected: selected,
    }
}

/// Partial spline restricted to the true support, with its own GCV-selected `lambda1`.
pub fn oracle_fit(
    sys: &SplineSystem,
    data: &Dataset,
    truth: &Truth,
    lambda1_grid: &[f64],
) -> Result<MethodFit, sparse_pspline_core::Error> {
    let sub = data.select_columns(&truth.support);
    let gcv = gcv_lambda1(sys, &sub, lambda1_grid)?;
    oracle_fit_at(sys, data, truth, gcv.lambda1_star)
}

/// [`oracle_fit`] at a fixed `lambda1`.
pub fn oracle_fit_at(
    sys: &SplineSystem,
    data: &Dataset,
    truth: &Truth,
    lambda1: f64,
) -> Result<MethodFit, sparse_pspline_core::Error> {
    let sub = data.select_columns(&truth.support);
    let prof = Profile::new(sys, &sub, lambda1)?;
    let ps = prof.partial_spline()?;
    let mut beta_hat = DVector::zeros(data.d());
    for (k, &j) in truth.support.iter().enumerate() {
        beta_hat[j] = ps.beta_tilde[k];
    }
    let f_hat = &ps.fitted - sub.x() * &ps.beta_tilde;
    Ok(MethodFit {
        method: Method::Oracle,
        beta_hat,
        f_hat,
        b: ps.b,
        c: ps.c,
        lambda1,
        lambda2: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub lambda1_grid: Vec<f64>,
    pub gamma: f64,
    pub order: usize,
    /// Evaluate each replicate's PSA `f_hat` on a 201-point grid.
    pub envelope: bool,
    /// Worker threads; `None` uses the ambient rayon pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            replicates: 100,
            lambda1_grid: log_grid(1e-8, 10.0, 40),
            gamma: 1.0,
            order: 2,
            envelope: false,
            threads: None,
        }
    }
}

/// Per-replicate results.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub metrics: Vec<(Method, ReplicateMetrics)>,
    pub lambda1_star: f64,
    pub envelope: Option<Vec<f64>>,
}

pub const ENVELOPE_POINTS: usize = 201;

pub fn envelope_grid() -> Vec<f64> {
    (0..ENVELOPE_POINTS)
        .map(|i| i as f64 / (ENVELOPE_POINTS - 1) as f64)
        .collect()
}

/// Fit every requested method on one generated sample.
pub fn fit_methods(
    sample: &Sample,
    methods: &[Method],
    config: &StudyConfig,
) -> Result<(Vec<MethodFit>, SplineSystem, f64), sparse_pspline_core::Error> {
    let data = &sample.dataset;
    let order = SplineOrder::new(config.order)?;
    let sys = SplineSystem::new(data.t().clone(), order)?;
    let needs_full = methods.iter().any(|m| *m != Method::Oracle);
    let mut fits = Vec::with_capacity(methods.len());
    let mut lambda1_star = f64::NAN;

    if needs_full {
        let tuning = TuningConfig {
            lambda1_grid: config.lambda1_grid.clone(),
            lambda2_grid: Lambda2Grid::PathBreakpoints,
            weights: WeightScheme::Adaptive {
                gamma: config.gamma,
            },
            ..TuningConfig::default()
        };
        tuning.validate()?;
        let gcv = gcv_lambda1(&sys, data, &tuning.lambda1_grid)?;
        lambda1_star = gcv.lambda1_star;
        let prof = Profile::new(&sys, data, lambda1_star)?;
        let initial = prof.partial_spline()?;
        let sigma2 = sigma2_from_fit(data, &initial)?;
        let needs_path = methods.iter().any(|m| matches!(m, Method::Psl | Method::Psa));
        let root = if needs_path {
            Some(prof.residual_root()?)
        } else {
            None
        };
        for &method in methods {
            let scheme = match method {
                Method::Ps => {
                    let fit = prof.finish(
                        initial.beta_tilde.clone(),
                        &initial,
                        0.0,
                        WeightScheme::Unit,
                    )?;
                    fits.push(MethodFit::from_psa(Method::Ps, &fit, data));
                    continue;
                }
                Method::Oracle => continue,
                Method::Psl => WeightScheme::Unit,
                Method::Psa => WeightScheme::Adaptive {
                    gamma: config.gamma,
                },
            };
            let scales = scheme.scales(&initial.beta_tilde);
            let (tp, path) = prof.lasso_path_with_root(root.as_ref().unwrap(), &scales)?;
            let bic = sparse_pspline_core::bic_lambda2(
                &prof,
                &tp,
                &path,
                sigma2,
                &Lambda2Grid::PathBreakpoints,
            )?;
            let beta = tp.back_transform(&path.solve_at(bic.lambda2_star));
            let fit = prof.finish(beta, &initial, bic.lambda2_star, scheme)?;
            fits.push(MethodFit::from_psa(method, &fit, data));
        }
    }
    if methods.contains(&Method::Oracle) {
        fits.push(oracle_fit(&sys, data, &sample.truth, &config.lambda1_grid)?);
    }
    // keep the caller's method order
    fits.sort_by_key(|f| methods.iter().position(|m| *m == f.method));
    Ok((fits, sys, lambda1_star))
}

fn run_replicate(
    spec: &ModelSpec,
    replicate: usize,
    config: &StudyConfig,
) -> Result<ReplicateOutcome, String> {
    let sample = spec.generate(replicate as u64).map_err(|e| e.to_string())?;
    let (fits, sys, lambda1_star) =
        fit_methods(&sample, &config.methods, config).map_err(|e| e.to_string())?;
    let metrics = fits
        .iter()
        .map(|f| {
            (
                f.method,
                evaluate_replicate(f, &sample.truth, &sample.dataset),
            )
        })
        .collect();
    let envelope = if config.envelope {
        let psa = fits
            .iter()
            .find(|f| f.method == Method::Psa)
            .or_else(|| fits.first());
        match psa {
            Some(f) => Some(
                envelope_grid()
                    .iter()
                    .map(|&t| sys.evaluate_spline(&f.b, &f.c, t))
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|e| e.to_string())?,
            ),
            None => None,
        }
    } else {
        None
    };
    Ok(ReplicateOutcome {
        replicate,
        metrics,
        lambda1_star,
        envelope,
    })
}

/// Result of [`run_study`]: the aggregate report plus per-replicate detail.
#[derive(Debug, Clone)]
pub struct Study {
    pub report: SimulationReport,
    pub outcomes: Vec<ReplicateOutcome>,
}

/// Generate, tune, fit and evaluate `config.replicates` datasets.
pub fn run_study(spec: &ModelSpec, config: &StudyConfig) -> Result<Study, SpecError> {
    spec.validate()?;
    if config.replicates < 2 {
        return Err(SpecError::Invalid("at least two replicates are required"));
    }
    if config.methods.is_empty() {
        return Err(SpecError::Invalid("no methods requested"));
    }
    let work = || {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| (r, run_replicate(spec, r, config)))
            .collect::<Vec<_>>()
    };
    let results = match config.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|_| SpecError::Invalid("could not build worker pool"))?
            .install(work),
        None => work(),
    };

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(o) => outcomes.push(o),
            Err(msg) => failures.push((r, msg)),
        }
    }
    let report = aggregate(spec, config, &outcomes, failures);
    Ok(Study { report, outcomes })
}

/// Sample mean and `sd / sqrt(R)`, summed in replicate order.
pub fn mean_se(values: &[f64]) -> Stat {
    let r = values.len();
    if r == 0 {
        return Stat {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / r as f64;
    let se = if r > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1) as f64;
        (var / r as f64).sqrt()
    } else {
        0.0
    };
    Stat { mean, se }
}

fn aggregate(
    spec: &ModelSpec,
    config: &StudyConfig,
    outcomes: &[ReplicateOutcome],
    failures: Vec<(usize, String)>,
) -> SimulationReport {
    let methods = config
        .methods
        .iter()
        .map(|&method| {
            let rows: Vec<&ReplicateMetrics> = outcomes
                .iter()
                .filter_map(|o| o.metrics.iter().find(|(m, _)| *m == method).map(|(_, r)| r))
                .collect();
            let col = |f: &dyn Fn(&ReplicateMetrics) -> f64| {
                mean_se(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            let r = rows.len().max(1) as f64;
            let selection_frequency = (0..spec.d)
                .map(|j| rows.iter().filter(|m| m.per_variable_selected[j]).count() as f64 / r)
                .collect();
            MethodSummary {
                method: method.label().to_string(),
                replicates: rows.len(),
                mse: col(&|m| m.mse_beta),
                mise: col(&|m| m.mise_f),
                size: col(&|m| m.size as f64),
                correct_zeros: col(&|m| m.correct_zeros as f64),
                incorrect_zeros: col(&|m| m.incorrect_zeros as f64),
                p_correct: rows.iter().filter(|m| m.exact_support).count() as f64 / r,
                max_incorrect_zeros: rows.iter().map(|m| m.incorrect_zeros).max().unwrap_or(0),
                selection_frequency,
            }
        })
        .collect();
    let lambdas: Vec<f64> = outcomes
        .iter()
        .map(|o| o.lambda1_star)
        .filter(|v| v.is_finite())
        .collect();
    SimulationReport {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        config: config.clone(),
        replicates_requested: config.replicates,
        failures,
        lambda1_star: mean_se(&lambdas),
        methods,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_function_small_values() {
        // B(1,1) = 1, B(2,3) = 1/12
        assert!((beta_fn(1, 1) - 1.0).abs() < 1e-15);
        assert!((beta_fn(2, 3) - 1.0 / 12.0).abs() < 1e-15);
        assert!((beta_fn(5, 11) - beta_fn(11, 5)).abs() < 1e-20);
    }

    #[test]
    fn presets_are_valid() {
        for spec in [
            ModelSpec::model1(100, 0.5, 1),
            ModelSpec::model2(100, 0.3, 1.0, 1),
            ModelSpec::model3(200, 0.5, 0.3, 1.0, 1),
        ] {
            spec.validate().unwrap();
            assert_eq!(spec.support().len(), spec.q);
        }
        let mut bad = ModelSpec::model1(100, 0.5, 1);
        bad.beta0[14] = 1.0;
        assert!(bad.validate().is_err());
        assert!(ModelSpec::model2(100, 1.0, 1.0, 1).validate().is_err());
    }

    #[test]
    fn mean_se_matches_hand_values() {
        let s = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // sample sd = sqrt(5/3); se = sd / 2
        assert!((s.se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }
}
