//! Command-line front end: `fit`, `tune`, `path` and `simulate`.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure, 4 internal error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use sparse_pspline_core::{
    gcv_lambda1, log_grid, sigma2_from_fit, tune, Error as CoreError, Lambda2Grid, Profile,
    PsFit, PsaFit, SplineOrder, SplineSystem, TuningConfig, TuningMode, WeightScheme,
};

use crate::io::{dataset_csv, read_dataset, IoError, LoadedData, ReadOptions};
use crate::report::write_atomic;
use crate::sim::{
    envelope_grid, fit_methods, run_study, Method, ModelSpec, StudyConfig, ENVELOPE_POINTS,
};

pub const THREADS_ENV: &str = "SPARSE_PSPLINE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sparse-pspline", version, about = "Sparse partial smoothing splines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit at given or automatically tuned penalties.
    Fit(FitArgs),
    /// Select penalties and write the tuning curves.
    Tune(TuneArgs),
    /// Write the full coefficient path over lambda2.
    Path(PathArgs),
    /// Run a Monte Carlo study.
    Simulate(SimArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "t")]
    pub t_column: String,
    #[arg(long, default_value = "y")]
    pub y_column: String,
    /// Comma-separated predictor columns; default is every other column.
    #[arg(long, value_delimiter = ',')]
    pub x_columns: Option<Vec<String>>,
    /// Map t affinely onto [0, 1].
    #[arg(long)]
    pub rescale_t: bool,
    /// Average rows with tied t.
    #[arg(long)]
    pub collapse_ties: bool,
    /// Spline order m (1 to 4).
    #[arg(long, default_value_t = 2)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// Fixed lambda1; chosen by GCV when absent.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// GCV grid for lambda1 as `lo,hi,k` (log-spaced).
    #[arg(long, default_value = "1e-8,10,40")]
    pub lambda1_grid: String,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = Weights::Adaptive)]
    pub weights: Weights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weights {
    Adaptive,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Psa,
    Psl,
    Ps,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Fixed lambda2; chosen by BIC when absent.
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// `psl` forces unit weights, `ps` skips the LASSO step.
    #[arg(long, value_enum, default_value_t = FitMethod::Psa)]
    pub method: FitMethod,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    TwoStage,
    Joint,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long, value_enum, default_value_t = Mode::TwoStage)]
    pub mode: Mode,
    /// Explicit lambda2 candidates (required for `--mode joint`).
    #[arg(long, value_delimiter = ',')]
    pub lambda2_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Report coefficients for the raw (unstandardized) predictors.
    #[arg(long)]
    pub original_scale: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Model1,
    Model2,
    Model3,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Error sd (models 1 and 3).
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// AR(1) correlation (model 2).
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Multiplier on the nonzero coefficients (models 2 and 3).
    #[arg(long, default_value_t = 1.0)]
    pub beta_scale: f64,
    /// Multiplier on f (model 3).
    #[arg(long, default_value_t = 1.0)]
    pub f_scale: f64,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "ps,psl,psa,oracle")]
    pub methods: Vec<String>,
    #[arg(long, default_value = "1e-8,10,40")]
    pub lambda1_grid: String,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Worker threads; overrides the environment variable.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write each replicate's PSA f-hat on a 201-point grid.
    #[arg(long)]
    pub envelope: bool,
    /// Write replicate 0 as `replicate0.csv` plus the in-memory PSA fit as `replicate0_fit.json`.
    #[arg(long)]
    pub dump_csv: bool,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            IllConditioned { .. }
            | NotPsd { .. }
            | CollinearDesign
            | DegenerateDirection { .. }
            | IterationsExceeded { .. }
            | InsufficientDf(_)
            | DegenerateKnots => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Core(c) => c.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    write_atomic(path, contents).map_err(|e| out_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(path, s.as_bytes())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| out_err(dir, e))
}

fn csv_string(header: &[String], rows: &[Vec<f64>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))
            .map_err(internal)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

/// Parse `lo,hi,k` into a log-spaced grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || CliError::Input(format!("grid `{spec}` must look like `lo,hi,k`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let k: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && k >= 1) {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, k))
}

fn load(args: &DataArgs) -> Result<(LoadedData, SplineSystem), CliError> {
    let opts = ReadOptions {
        t_column: args.t_column.clone(),
        y_column: args.y_column.clone(),
        x_columns: args.x_columns.clone(),
        rescale_t: args.rescale_t,
        collapse_ties: args.collapse_ties,
    };
    let loaded = read_dataset(&args.input, &opts)?;
    let order = SplineOrder::new(args.order)?;
    let sys = SplineSystem::new(loaded.dataset.t().clone(), order)?;
    Ok((loaded, sys))
}

fn scheme(p: &PenaltyArgs) -> WeightScheme {
    match p.weights {
        Weights::Adaptive => WeightScheme::Adaptive { gamma: p.gamma },
        Weights::Unit => WeightScheme::Unit,
    }
}

fn choose_lambda1(
    p: &PenaltyArgs,
    sys: &SplineSystem,
    loaded: &LoadedData,
) -> Result<(f64, Vec<(f64, f64)>), CliError> {
    match p.lambda1 {
        Some(l) => Ok((l, Vec::new())),
        None => {
            let grid = parse_grid(&p.lambda1_grid)?;
            let gcv = gcv_lambda1(sys, &loaded.dataset, &grid)?;
            Ok((gcv.lambda1_star, gcv.points))
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CoefficientRecord {
    pub name: String,
    pub estimate: f64,
    pub estimate_original_scale: f64,
    pub initial: f64,
    pub weight: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub order: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    pub sigma2_hat: Option<f64>,
    pub trace_a: f64,
    pub intercept_original_scale: f64,
    pub coefficients: Vec<CoefficientRecord>,
    pub active_set: Vec<String>,
    pub spline_b: Vec<f64>,
    pub spline_c: Vec<f64>,
    pub t_range: Option<(f64, f64)>,
}

impl FitReport {
    pub fn build(
        method: &str,
        loaded: &LoadedData,
        sys: &SplineSystem,
        fit: &PsaFit,
        initial: &PsFit,
        sigma2_hat: Option<f64>,
    ) -> Self {
        let data = &loaded.dataset;
        let orig = data.to_original_scale(&fit.beta_hat);
        let coefficients = (0..data.d())
            .map(|j| CoefficientRecord {
                name: loaded.x_names[j].clone(),
                estimate: fit.beta_hat[j],
                estimate_original_scale: orig[j],
                initial: fit.beta_tilde[j],
                weight: Some(fit.weights[j]).filter(|w| w.is_finite()),
            })
            .collect();
        Self {
            schema_version: crate::report::SCHEMA_VERSION,
            method: method.to_string(),
            n: data.n(),
            d: data.d(),
            order: sys.order().get(),
            lambda1: fit.lambda1,
            lambda2: fit.lambda2,
            gamma: fit.gamma,
            sigma2_hat,
            trace_a: initial.trace_a,
            intercept_original_scale: -data.intercept_shift(&orig),
            coefficients,
            active_set: fit
                .active_set
                .iter()
                .map(|&j| loaded.x_names[j].clone())
                .collect(),
            spline_b: fit.b.iter().copied().collect(),
            spline_c: fit.c.iter().copied().collect(),
            t_range: loaded.t_range,
        }
    }

    fn check_finite(&self) -> Result<(), CliError> {
        let vals = self
            .coefficients
            .iter()
            .map(|c| c.estimate)
            .chain(self.spline_b.iter().copied())
            .chain(self.spline_c.iter().copied())
            .chain([self.lambda1, self.lambda2]);
        for v in vals {
            if !v.is_finite() {
                return Err(CliError::Internal("non-finite value in fit".into()));
            }
        }
        Ok(())
    }
}

/// `f_hat` on an even 201-point grid over `[0, 1]`.
fn fhat_csv(sys: &SplineSystem, fit: &PsaFit, t_range: Option<(f64, f64)>) -> Result<String, CliError> {
    let mut header = vec!["t".to_string(), "f_hat".to_string()];
    if t_range.is_some() {
        header.push("t_original".to_string());
    }
    let rows = envelope_grid()
        .into_iter()
        .map(|t| {
            let f = sys.evaluate_spline(&fit.b, &fit.c, t)?;
            let mut row = vec![t, f];
            if let Some((lo, hi)) = t_range {
                row.push(lo + t * (hi - lo));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    csv_string(&header, &rows)
}

/// Fit with the CLI's penalty rules. Shared with the simulation dump so both
/// paths produce identical numbers.
pub fn fit_loaded(
    loaded: &LoadedData,
    sys: &SplineSystem,
    penalty: &PenaltyArgs,
    method: FitMethod,
    lambda2: Option<f64>,
) -> Result<(PsaFit, PsFit, Option<f64>), CliError> {
    let data = &loaded.dataset;
    let (lambda1, _) = choose_lambda1(penalty, sys, loaded)?;
    let prof = Profile::new(sys, data, lambda1)?;
    let initial = prof.partial_spline()?;
    let sigma2 = sigma2_from_fit(data, &initial).ok();
    let scheme = match method {
        FitMethod::Psl => WeightScheme::Unit,
        _ => scheme(penalty),
    };
    let fit = match (method, lambda2) {
        (FitMethod::Ps, _) => {
            prof.finish(initial.beta_tilde.clone(), &initial, 0.0, WeightScheme::Unit)?
        }
        (_, Some(l2)) => prof.fit(l2, scheme, Some(&initial))?,
        (_, None) => {
            let sigma2 = sigma2.ok_or(CoreError::InsufficientDf(
                data.n() as f64 - initial.trace_a - data.d() as f64,
            ))?;
            let scales = scheme.scales(&initial.beta_tilde);
            let (tp, path) = prof.lasso_path(&scales)?;
            let bic = sparse_pspline_core::bic_lambda2(
                &prof,
                &tp,
                &path,
                sigma2,
                &Lambda2Grid::PathBreakpoints,
            )?;
            let beta = tp.back_transform(&path.solve_at(bic.lambda2_star));
            prof.finish(beta, &initial, bic.lambda2_star, scheme)?
        }
    };
    Ok((fit, initial, sigma2))
}

fn method_label(m: FitMethod) -> &'static str {
    match m {
        FitMethod::Psa => "PSA",
        FitMethod::Psl => "PSL",
        FitMethod::Ps => "PS",
    }
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let (loaded, sys) = load(&args.data)?;
    let (fit, initial, sigma2) =
        fit_loaded(&loaded, &sys, &args.penalty, args.method, args.lambda2)?;
    let report = FitReport::build(method_label(args.method), &loaded, &sys, &fit, &initial, sigma2);
    report.check_finite()?;
    ensure_dir(&args.output_dir)?;
    write_json(&args.output_dir.join("fit.json"), &report)?;
    let f = fhat_csv(&sys, &fit, loaded.t_range)?;
    write_file(&args.output_dir.join("fhat.csv"), f.as_bytes())?;
    println!("wrote {}", args.output_dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct TuneReport {
    schema_version: u32,
    mode: &'static str,
    lambda1_star: f64,
    lambda2_star: f64,
    sigma2_hat: f64,
    fit: FitReport,
}

fn cmd_tune(args: &TuneArgs) -> Result<(), CliError> {
    let (loaded, sys) = load(&args.data)?;
    let data = &loaded.dataset;
    let grid1 = match args.penalty.lambda1 {
        Some(l) => vec![l],
        None => parse_grid(&args.penalty.lambda1_grid)?,
    };
    let config = TuningConfig {
        lambda1_grid: grid1.clone(),
        lambda2_grid: match &args.lambda2_grid {
            Some(g) => Lambda2Grid::Explicit(g.clone()),
            None => Lambda2Grid::PathBreakpoints,
        },
        weights: scheme(&args.penalty),
        mode: match args.mode {
            Mode::TwoStage => TuningMode::TwoStage,
            Mode::Joint => TuningMode::JointGcv,
        },
    };
    let tuned = tune(&sys, data, &config)?;
    let fit_report = FitReport::build(
        "PSA",
        &loaded,
        &sys,
        &tuned.fit,
        &tuned.initial,
        Some(tuned.sigma2_hat),
    );
    fit_report.check_finite()?;
    ensure_dir(&args.output_dir)?;
    match args.mode {
        Mode::TwoStage => {
            let gcv = gcv_lambda1(&sys, data, &grid1)?;
            let rows: Vec<Vec<f64>> = gcv.points.iter().map(|&(l, g)| vec![l, g]).collect();
            let s = csv_string(&["lambda1".into(), "gcv".into()], &rows)?;
            write_file(&args.output_dir.join("gcv.csv"), s.as_bytes())?;
            let rows: Vec<Vec<f64>> = tuned.bic_curve.iter().map(|&(l, b)| vec![l, b]).collect();
            let s = csv_string(&["lambda2".into(), "bic".into()], &rows)?;
            write_file(&args.output_dir.join("bic.csv"), s.as_bytes())?;
        }
        Mode::Joint => {
            let grid2 = args.lambda2_grid.clone().unwrap_or_default();
            let joint =
                sparse_pspline_core::joint_gcv(&sys, data, &grid1, &grid2, config.weights)?;
            let rows: Vec<Vec<f64>> = joint
                .surface
                .iter()
                .map(|&(a, b, g)| vec![a, b, g])
                .collect();
            let s = csv_string(&["lambda1".into(), "lambda2".into(), "gcv".into()], &rows)?;
            write_file(&args.output_dir.join("gcv_surface.csv"), s.as_bytes())?;
        }
    }
    let report = TuneReport {
        schema_version: crate::report::SCHEMA_VERSION,
        mode: match args.mode {
            Mode::TwoStage => "two-stage",
            Mode::Joint => "joint",
        },
        lambda1_star: tuned.lambda1_star,
        lambda2_star: tuned.lambda2_star,
        sigma2_hat: tuned.sigma2_hat,
        fit: fit_report,
    };
    write_json(&args.output_dir.join("tune.json"), &report)?;
    println!(
        "lambda1 = {} lambda2 = {}",
        tuned.lambda1_star, tuned.lambda2_star
    );
    Ok(())
}

fn cmd_path(args: &PathArgs) -> Result<(), CliError> {
    let (loaded, sys) = load(&args.data)?;
    let data = &loaded.dataset;
    let (lambda1, _) = choose_lambda1(&args.penalty, &sys, &loaded)?;
    let prof = Profile::new(&sys, data, lambda1)?;
    let initial = prof.partial_spline()?;
    let scales = scheme(&args.penalty).scales(&initial.beta_tilde);
    let (tp, path) = prof.lasso_path(&scales)?;
    let mut header = vec!["lambda2".to_string()];
    header.extend(loaded.x_names.iter().cloned());
    let rows: Vec<Vec<f64>> = path
        .breakpoints
        .iter()
        .map(|&l2| {
            let mut beta: DVector<f64> = tp.back_transform(&path.solve_at(l2));
            if args.original_scale {
                beta = data.to_original_scale(&beta);
            }
            let mut row = vec![l2];
            row.extend(beta.iter().copied());
            row
        })
        .collect();
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Internal("non-finite value on the path".into()));
    }
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_file(&args.output, csv_string(&header, &rows)?.as_bytes())?;
    println!("{} breakpoints, lambda1 = {lambda1}", rows.len());
    Ok(())
}

/// Worker count from the flag, then the environment.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Input(format!("{THREADS_ENV} must be a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn cmd_simulate(args: &SimArgs) -> Result<(), CliError> {
    let spec = match args.model {
        ModelArg::Model1 => ModelSpec::model1(args.n, args.sigma, args.seed),
        ModelArg::Model2 => ModelSpec::model2(args.n, args.rho, args.beta_scale, args.seed),
        ModelArg::Model3 => {
            ModelSpec::model3(args.n, args.sigma, args.beta_scale, args.f_scale, args.seed)
        }
    };
    let methods = args
        .methods
        .iter()
        .map(|m| {
            Method::parse(m).ok_or_else(|| CliError::Input(format!("unknown method `{m}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let config = StudyConfig {
        methods,
        replicates: args.replicates,
        lambda1_grid: parse_grid(&args.lambda1_grid)?,
        gamma: args.gamma,
        order: 2,
        envelope: args.envelope,
        threads: thread_count(args.threads)?,
    };
    let study = run_study(&spec, &config).map_err(|e| CliError::Input(e.to_string()))?;
    let report = &study.report;
    ensure_dir(&args.output_dir)?;
    let json = report
        .to_json()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&args.output_dir.join("report.json"), json.as_bytes())?;
    let table = report
        .table_csv()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&args.output_dir.join("table.csv"), table.as_bytes())?;
    let sel = report
        .selection_csv()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&args.output_dir.join("selection.csv"), sel.as_bytes())?;

    if args.envelope {
        let grid = envelope_grid();
        let mut header = vec!["t".to_string()];
        let curves: Vec<(usize, &Vec<f64>)> = study
            .outcomes
            .iter()
            .filter_map(|o| o.envelope.as_ref().map(|e| (o.replicate, e)))
            .collect();
        header.extend(curves.iter().map(|(r, _)| format!("rep{r}")));
        let rows: Vec<Vec<f64>> = (0..ENVELOPE_POINTS)
            .map(|i| {
                let mut row = vec![grid[i]];
                row.extend(curves.iter().map(|(_, c)| c[i]));
                row
            })
            .collect();
        write_file(
            &args.output_dir.join("envelope.csv"),
            csv_string(&header, &rows)?.as_bytes(),
        )?;
    }

    if args.dump_csv {
        let sample = spec.generate(0)?;
        let names: Vec<String> = (1..=spec.d).map(|j| format!("x{j}")).collect();
        let csv = dataset_csv(
            &names,
            &sample.raw_x,
            sample.dataset.t().as_slice(),
            sample.dataset.y(),
        )
        .map_err(|e| CliError::Internal(e.to_string()))?;
        write_file(&args.output_dir.join("replicate0.csv"), csv.as_bytes())?;
        let one = StudyConfig {
            methods: vec![Method::Psa],
            ..config.clone()
        };
        let (fits, sys, _) = fit_methods(&sample, &one.methods, &one)?;
        let f = &fits[0];
        let dump = serde_json::json!({
            "schema_version": crate::report::SCHEMA_VERSION,
            "method": "PSA",
            "lambda1": f.lambda1,
            "lambda2": f.lambda2,
            "beta_hat": f.beta_hat.as_slice(),
            "spline_b": f.b.as_slice(),
            "spline_c": f.c.as_slice(),
            "order": sys.order().get(),
        });
        write_json(&args.output_dir.join("replicate0_fit.json"), &dump)?;
    }

    for m in &report.methods {
        println!(
            "{:<7} mse {:.4} ({:.4})  mise {:.4} ({:.4})  size {:.2}  p_correct {:.2}",
            m.method, m.mse.mean, m.mse.se, m.mise.mean, m.mise.se, m.size.mean, m.p_correct
        );
    }
    if !report.failures.is_empty() {
        eprintln!("{} replicate(s) failed", report.failures.len());
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Path(a) => cmd_path(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
