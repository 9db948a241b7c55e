//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.
//!
//! Run with `cargo test -p sparse-pspline --test acceptance`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use sparse_pspline::report::SimulationReport;
use sparse_pspline::sim::{run_study, Method, ModelSpec, StudyConfig};
use sparse_pspline_core::{
    cd_solve, gram_matrix, kkt_residual, lars_path, log_grid, reproducing_kernel,
    scaled_bernoulli, KnotGrid, SplineOrder, SplineSystem, TransformedProblem,
};

const R_MAIN: usize = 200;
const R_SLOW: usize = 100;

fn seed(criterion: u64) -> u64 {
    1000 + criterion
}

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn study(spec: ModelSpec, methods: &[Method], replicates: usize) -> SimulationReport {
    let config = StudyConfig {
        methods: methods.to_vec(),
        replicates,
        ..StudyConfig::default()
    };
    let report = run_study(&spec, &config).expect("valid study").report;
    assert!(
        report.failures.is_empty(),
        "replicate failures: {:?}",
        report.failures
    );
    report
}

fn random_grid(rng: &mut ChaCha20Rng, n: usize) -> KnotGrid {
    loop {
        let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        t.sort_by(f64::total_cmp);
        if t.windows(2).all(|w| w[1] - w[0] > 1e-7) {
            return KnotGrid::new(t).unwrap();
        }
    }
}

fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn oracle_bernoulli(nu: usize, t: f64) -> f64 {
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64);
    let mut b = vec![1.0f64];
    for n in 1..=nu {
        let acc: f64 = b.iter().enumerate().map(|(k, bk)| binom(n + 1, k) * bk).sum();
        b.push(-acc / (n + 1) as f64);
    }
    let fact = (1..=nu).fold(1.0, |a, i| a * i as f64);
    (0..=nu)
        .map(|k| binom(nu, k) * b[k] * t.powi((nu - k) as i32))
        .sum::<f64>()
        / fact
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(seed(1));
    let mut worst_bern = 0.0f64;
    for _ in 0..500 {
        let nu = rng.random_range(0..=8);
        let t = rng.random::<f64>();
        worst_bern = worst_bern.max((scaled_bernoulli(nu, t).unwrap() - oracle_bernoulli(nu, t)).abs());
    }
    let mut worst_sym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut worst_as = 0.0f64;
    let mut eig_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut monotone = true;
    for &n in &[10usize, 50, 200] {
        for m in 1..=3 {
            let order = SplineOrder::new(m).unwrap();
            for _ in 0..2 {
                let grid = random_grid(&mut rng, n);
                for _ in 0..50 {
                    let (s, t) = (rng.random::<f64>(), rng.random::<f64>());
                    let d = reproducing_kernel(s, t, order).unwrap()
                        - reproducing_kernel(t, s, order).unwrap();
                    worst_sym = worst_sym.max(d.abs());
                }
                min_eig = min_eig.min(sym_eigenvalues(&gram_matrix(&grid, order))[0]);
                let sys = SplineSystem::new(grid, order).unwrap();
                let lambda = 10f64.powf(rng.random_range(-6.0..0.0));
                let a = sys.influence_matrix(lambda).unwrap();
                worst_as = worst_as.max((&a * sys.s() - sys.s()).amax());
                let ev = sym_eigenvalues(&a);
                eig_range = (eig_range.0.min(ev[0]), eig_range.1.max(ev[n - 1]));
                let tr: Vec<f64> = log_grid(1e-8, 10.0, 20)
                    .iter()
                    .map(|&l| sys.trace_influence(l).unwrap())
                    .collect();
                monotone &= tr.windows(2).all(|w| w[1] <= w[0] + 1e-9);
            }
        }
    }
    let pass = worst_bern <= 1e-12
        && worst_sym <= 1e-14
        && min_eig >= -1e-10
        && worst_as <= 1e-8
        && eig_range.0 >= -1e-8
        && eig_range.1 <= 1.0 + 1e-8
        && monotone;
    check(
        pass,
        format!(
            "bernoulli {worst_bern:.1e}, symmetry {worst_sym:.1e}, min eig(Sigma) {min_eig:.1e}, \
             |AS-S| {worst_as:.1e}, eig(A) in [{:.1e}, 1{:+.1e}], trace monotone {monotone}",
            eig_range.0,
            eig_range.1 - 1.0
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(seed(2));
    let mut worst_gap = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut zero_ok = true;
    for _ in 0..50 {
        let n = rng.random_range(20..=100);
        let p = rng.random_range(2..=30usize.min(n - 2));
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut beta = DVector::zeros(p);
        for j in 0..p.min(3) {
            beta[j] = 2.0 - 0.5 * j as f64;
        }
        let e = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let tp = TransformedProblem::from_parts(&x * &beta + e * 0.5, x).unwrap();
        let path = lars_path(&tp).unwrap();
        let lmax = tp.lambda_max();
        for k in 1..=10 {
            let lam = lmax * k as f64 / 11.0;
            let b = path.solve_at(lam);
            worst_gap = worst_gap.max((&b - cd_solve(&tp, lam).unwrap()).amax());
            worst_kkt = worst_kkt.max(kkt_residual(&tp, &b, lam));
        }
        zero_ok &= path.solve_at(lmax).iter().all(|&b| b == 0.0)
            && path.solve_at(2.0 * lmax).iter().all(|&b| b == 0.0);
    }
    // orthonormal +-1 design: LASSO solution is soft-thresholding at lambda/2
    let n = 8;
    let x = DMatrix::from_fn(n, 3, |i, j| if (i >> j) & 1 == 1 { 1.0 } else { -1.0 });
    let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let z = x.tr_mul(&y) / n as f64;
    let tp = TransformedProblem::from_parts(y, x).unwrap();
    let path = lars_path(&tp).unwrap();
    let mut worst_soft = 0.0f64;
    for k in 0..20 {
        let lam = tp.lambda_max() * k as f64 / 19.0;
        let b = path.solve_at(lam);
        for j in 0..3 {
            let st = z[j].signum() * (z[j].abs() - lam / 2.0).max(0.0);
            worst_soft = worst_soft.max((b[j] - st).abs());
        }
    }
    let pass = worst_gap <= 1e-6 && worst_kkt <= 1e-6 && worst_soft <= 1e-8 && zero_ok;
    check(
        pass,
        format!(
            "LARS vs CD {worst_gap:.1e}, KKT {worst_kkt:.1e}, soft-threshold {worst_soft:.1e}, \
             zero at lambda_max {zero_ok}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let r = study(ModelSpec::model1(100, 0.5, seed(3)), &[Method::Psa], R_MAIN);
    let psa = r.method("PSA").unwrap();
    let pass = (0.17..=0.31).contains(&psa.mse.mean)
        && (4.0..=5.2).contains(&psa.size.mean)
        && psa.incorrect_zeros.mean <= 0.02;
    check(
        pass,
        format!(
            "PSA mse {:.3} ({:.3}) in [0.17, 0.31], size {:.2} in [4.0, 5.2], incorrect0 {:.3} <= 0.02",
            psa.mse.mean, psa.mse.se, psa.size.mean, psa.incorrect_zeros.mean
        ),
    )
}

fn criterion_4() -> Outcome {
    let r = study(ModelSpec::model1(200, 0.5, seed(4)), &[Method::Psl, Method::Psa], R_MAIN);
    let psa = r.method("PSA").unwrap().p_correct;
    let psl = r.method("PSL").unwrap().p_correct;
    check(
        psa >= 0.60 && psl <= 0.30 && psa > psl,
        format!("P(correct) PSA {psa:.3} >= 0.60, PSL {psl:.3} <= 0.30"),
    )
}

fn criterion_5() -> Outcome {
    let r = study(ModelSpec::model2(200, 0.3, 1.0, seed(5)), &[Method::Psa], R_MAIN);
    let psa = r.method("PSA").unwrap();
    let pass = (0.06..=0.12).contains(&psa.mse.mean)
        && (10.0..=10.5).contains(&psa.size.mean)
        && psa.max_incorrect_zeros == 0;
    check(
        pass,
        format!(
            "PSA mse {:.3} ({:.3}) in [0.06, 0.12], size {:.2} in [10.0, 10.5], max incorrect0 {}",
            psa.mse.mean, psa.mse.se, psa.size.mean, psa.max_incorrect_zeros
        ),
    )
}

fn criterion_6() -> Outcome {
    let r = study(ModelSpec::model3(200, 0.5, 0.3, 1.0, seed(6)), &Method::ALL, R_SLOW);
    let get = |m: &str| r.method(m).unwrap();
    let order = ["Oracle", "PSA", "PSL", "PS"];
    let mut pass = true;
    let mut parts = Vec::new();
    for w in order.windows(2) {
        let (a, b) = (get(w[0]).mse, get(w[1]).mse);
        let pooled = (a.se * a.se + b.se * b.se).sqrt();
        let ok = b.mean - a.mean >= 2.0 * pooled;
        pass &= ok;
        parts.push(format!("{} {:.3} < {} {:.3} (gap {:.3}, 2se {:.3})", w[0], a.mean, w[1], b.mean, b.mean - a.mean, 2.0 * pooled));
    }
    let inc = get("PSA").incorrect_zeros.mean;
    pass &= inc <= 0.05;
    check(pass, format!("[slow tier] {}; PSA incorrect0 {inc:.3} <= 0.05", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let a = study(ModelSpec::model1(100, 1.0, seed(7)), &[Method::Psa], R_MAIN);
    let b = study(ModelSpec::model1(200, 1.0, seed(7) + 100), &[Method::Psa], R_MAIN);
    let (p1, p2) = (a.method("PSA").unwrap().p_correct, b.method("PSA").unwrap().p_correct);
    let r = R_MAIN as f64;
    let pooled = (p1 * (1.0 - p1) / r + p2 * (1.0 - p2) / r).sqrt();
    check(
        p2 - p1 >= pooled,
        format!("P(correct) n=100 {p1:.3}, n=200 {p2:.3}, gap {:.3} >= 1 pooled se {pooled:.3}", p2 - p1),
    )
}

fn criterion_8() -> Outcome {
    let spec = ModelSpec::model2(100, 0.6, 1.0 / 3.0, seed(8));
    let run = |threads| {
        let config = StudyConfig {
            replicates: 8,
            threads: Some(threads),
            envelope: true,
            ..StudyConfig::default()
        };
        let rep = run_study(&spec, &config).unwrap().report;
        (rep.to_json().unwrap(), rep.table_csv().unwrap(), rep.selection_csv().unwrap())
    };
    let a = run(1);
    let b = run(1);
    let c = run(3);
    check(
        a == b && a == c,
        format!("repeat identical {}, thread-count independent {}", a == b, a == c),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "kernel and smoother properties", criterion_1),
        (2, "optimization oracles", criterion_2),
        (3, "Model 1 n=100 sigma=0.5 PSA accuracy", criterion_3),
        (4, "Model 1 n=200 sigma=0.5 selection probability", criterion_4),
        (5, "Model 2 rho=0.3 n=200 PSA accuracy", criterion_5),
        (6, "Model 3 n=200 method ordering", criterion_6),
        (7, "Model 1 sigma=1 selection improves with n", criterion_7),
        (8, "simulation determinism", criterion_8),
    ];
    // optional criterion numbers, e.g. `-- 3 4`
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| p == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let status = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {id} {status}: {name}: {} [{:.1}s]",
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criterion(s) failed");
        std::process::exit(1);
    }
}
