//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers to run a subset:
//! `cargo test --test acceptance -- 1 3 8`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use irw_core::simulation::{
    constant_beta_star, run_benchmark, run_roc, table_beta_star, BenchSettings, ErrorDist, Method,
    NoiseModel, ScenarioSpec,
};
use irw_core::tuning::tau_center;
use irw_core::{
    irw_fit, oracle_fit, solve_weighted_l1, Dataset, LossKind, Penalty, PenaltyKind,
    PipelineConfig, RobustLoss, SolverConfig,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, beta: &[f64], noise: f64) -> Dataset {
    let x = Array2::from_shape_fn((n, beta.len()), |_| rng.sample::<f64, _>(StandardNormal));
    let y = x.dot(&Array1::from(beta.to_vec()))
        + Array1::from_shape_fn(n, |_| noise * rng.sample::<f64, _>(StandardNormal));
    Dataset::new(y, x).unwrap()
}

fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

/// Cyclic coordinate descent for `(1/2n)||y - Xb||^2 + lambda ||b||_1`.
fn cd_lasso(x: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> Array1<f64> {
    let (n, d) = x.dim();
    let nf = n as f64;
    let mut b = Array1::<f64>::zeros(d);
    let mut r = y.clone();
    let sq: Vec<f64> = (0..d).map(|j| x.column(j).dot(&x.column(j)) / nf).collect();
    for _ in 0..200_000 {
        let mut delta = 0.0_f64;
        for j in 0..d {
            let col = x.column(j);
            let z = col.dot(&r) / nf + sq[j] * b[j];
            let new = z.signum() * (z.abs() - lambda).max(0.0) / sq[j];
            let change = new - b[j];
            if change != 0.0 {
                r.scaled_add(-change, &col);
                b[j] = new;
            }
            delta = delta.max(change.abs());
        }
        if delta < 1e-14 {
            break;
        }
    }
    b
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0_f64;
    for seed in 0..50 {
        let mut r = rng(seed);
        let beta: Vec<f64> = (0..5).map(|_| 4.0 * r.random::<f64>() - 2.0).collect();
        let data = gaussian(&mut r, 50, &beta, 1.0);
        let lambda = 0.02 + 0.4 * r.random::<f64>();
        let tau = 1e4;
        let loss = RobustLoss::huber(tau).unwrap();
        let cfg = SolverConfig {
            eps: 1e-10,
            ..SolverConfig::default()
        };
        let out = solve_weighted_l1(
            &data,
            &loss,
            Array1::from_elem(5, lambda).view(),
            Array1::zeros(5).view(),
            &cfg,
        )
        .unwrap();
        let resid = data.residuals(out.beta.view()).unwrap();
        if !out.converged || resid.iter().any(|v| v.abs() > tau) {
            return verdict(
                false,
                format!("seed {seed}: not in the quadratic regime or not converged"),
            );
        }
        let oracle = cd_lasso(&data.x().to_owned(), &data.y().to_owned(), lambda);
        worst = worst.max(max_abs_diff(&out.beta, &oracle));
    }
    verdict(
        worst <= 1e-4,
        format!("max l_inf gap to coordinate descent {worst:.2e} (tol 1e-4)"),
    )
}

fn criterion_2() -> Verdict {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_gap = f64::INFINITY;
    let mut iterations = 0usize;
    for kind in LossKind::ALL {
        for seed in 0..100 {
            let mut r = rng(10_000 + seed);
            let n = r.random_range(20..80);
            let d = r.random_range(5..40);
            let beta: Vec<f64> = (0..d).map(|j| if j < 3 { 2.0 } else { 0.0 }).collect();
            let data = gaussian(&mut r, n, &beta, 1.0);
            let mut y = data.y().to_owned();
            for i in 0..n / 8 {
                y[i] += 25.0 * r.random::<f64>();
            }
            let data = Dataset::new(y, data.x().to_owned()).unwrap();
            let loss = RobustLoss::new(kind, 0.3 + 3.0 * r.random::<f64>()).unwrap();
            let lambda = 0.05 + 0.3 * r.random::<f64>();
            let cfg = PipelineConfig::new(
                loss,
                Penalty::new(PenaltyKind::scad(), lambda).unwrap(),
                3,
                n,
            );
            let fit = irw_fit(&data, &cfg).unwrap();
            for stage in &fit.stages {
                let objs: Vec<f64> = stage.trace.objectives().collect();
                for w in objs.windows(2) {
                    worst_rise = worst_rise.max(w[1] - w[0]);
                }
                for rec in &stage.trace.iterations {
                    worst_gap = worst_gap.min(rec.majorization_gap);
                    iterations += 1;
                }
            }
        }
    }
    verdict(
        worst_rise <= 1e-12 && worst_gap >= -1e-12,
        format!("{iterations} iterations; largest objective rise {worst_rise:.2e}, smallest majorization gap {worst_gap:.2e}"),
    )
}

fn criterion_3() -> Verdict {
    let mut worst = 0.0_f64;
    let mut r = rng(3);
    for kind in LossKind::ALL {
        let loss = RobustLoss::new(kind, 0.5 + 2.0 * r.random::<f64>()).unwrap();
        let mut checked = 0;
        while checked < 20 {
            let x = loss.tau * (8.0 * r.random::<f64>() - 4.0);
            let u = x.abs() / loss.tau;
            let rough: &[f64] = if kind == LossKind::SmoothedHuber1 {
                &[0.0, 1.0]
            } else {
                &[]
            };
            if kind
                .kinks()
                .iter()
                .chain(rough)
                .any(|k| (u - k.abs()).abs() < 1e-3)
            {
                continue;
            }
            let h = 1e-6 * loss.tau;
            let d1 = (loss.value(x + h) - loss.value(x - h)) / (2.0 * h);
            let d2 = (loss.deriv(x + h) - loss.deriv(x - h)) / (2.0 * h);
            let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1e-3);
            worst = worst
                .max(rel(d1, loss.deriv(x)))
                .max(rel(d2, loss.second(x)));
            checked += 1;
        }
    }
    verdict(
        worst <= 1e-5,
        format!("max relative finite-difference error {worst:.2e} (tol 1e-5)"),
    )
}

fn criterion_4() -> Verdict {
    // Stated local-quadratic constants, in LossKind::ALL order.
    let stated_c4 = [1.0, 0.45, 0.2, 0.5, std::f64::consts::FRAC_1_SQRT_2];
    let mut broken = Vec::new();
    for (kind, c4) in LossKind::ALL.into_iter().zip(stated_c4) {
        let c = kind.constants();
        let mut ratio = 0.0_f64;
        let mut ok = true;
        for i in 0..10_000 {
            let x = -50.0 + 100.0 * i as f64 / 9_999.0;
            ok &= kind.deriv(x).abs() <= c.c1 + 1e-15;
            if x.abs() <= c.c3 {
                ok &= kind.second(x) >= c.c2 - 1e-15;
            }
            let dev = (kind.deriv(x) - x).abs();
            // rounding slack only: smoothed-huber-1 meets its bound with equality
            ok &= dev <= c4 * x * x * (1.0 + 1e-12);
            if x != 0.0 {
                ratio = ratio.max(dev / (x * x));
            }
        }
        if !ok {
            broken.push(format!(
                "{kind}: max |l'(x)-x|/x^2 = {ratio:.5} vs stated {c4}"
            ));
        }
    }
    if broken.is_empty() {
        verdict(
            true,
            "all five families satisfy their bounds on a 1e4-point grid",
        )
    } else {
        verdict(false, broken.join("; "))
    }
}

fn criterion_5() -> Verdict {
    let (n, d) = (200, 50);
    let beta: Vec<f64> = (0..d).map(|j| if j < 3 { 5.0 } else { 0.0 }).collect();
    let loss = RobustLoss::huber(tau_center(1.0, n, d)).unwrap();
    let lambda = 2.0 * (2.0 * (d as f64).ln() / n as f64).sqrt();
    let cfg = PipelineConfig::new(
        loss,
        Penalty::new(PenaltyKind::scad(), lambda).unwrap(),
        irw_core::default_stage_count(3, d),
        n,
    );
    let mut hits = 0;
    let mut worst = 0.0_f64;
    for seed in 0..100 {
        let data = gaussian(&mut rng(20_000 + seed), n, &beta, 1.0);
        let fit = irw_fit(&data, &cfg).unwrap();
        let oracle = oracle_fit(&data, &loss, &[0, 1, 2]).unwrap();
        let gap = max_abs_diff(&fit.beta, &oracle);
        if fit.active_set == [0, 1, 2] && gap <= 1e-3 {
            hits += 1;
            worst = worst.max(gap);
        }
    }
    verdict(
        hits >= 95,
        format!("oracle recovered in {hits}/100 (need 95); largest matching gap {worst:.2e}"),
    )
}

fn criterion_6() -> Verdict {
    let spec = ScenarioSpec {
        n: 100,
        d: 200,
        beta_star: table_beta_star(200),
        model: NoiseModel::Homoscedastic,
        error: ErrorDist::lognormal_centered(0.0, 1.2),
        seed: 2024,
    };
    let settings = BenchSettings {
        replications: 50,
        methods: vec![Method::Lasso, Method::Mcp, Method::HuberMcp],
        ..BenchSettings::default()
    };
    let report = run_benchmark(&[spec], &settings).unwrap();
    let row = |m: Method| report.rows.iter().find(|r| r.method == m).unwrap();
    let (h, q) = (row(Method::HuberMcp), row(Method::Mcp));
    let pass = report.failures.is_empty()
        && h.replications == 50
        && h.tp_mean >= 5.5
        && h.fp_mean <= 3.0
        && h.re2_mean <= 0.45
        && h.re2_mean < q.re2_mean;
    verdict(
        pass,
        format!(
            "Huber-MC+ TP {:.2} FP {:.2} RE2 {:.3}; MC+ RE2 {:.3}; {} failed replications",
            h.tp_mean,
            h.fp_mean,
            h.re2_mean,
            q.re2_mean,
            report.failures.len()
        ),
    )
}

fn criterion_7() -> Verdict {
    let spec = ScenarioSpec {
        n: 100,
        d: 200,
        beta_star: constant_beta_star(200, 10, 1.5),
        model: NoiseModel::Homoscedastic,
        error: ErrorDist::pareto_centered(2.0, 2.2),
        seed: 7,
    };
    let settings = BenchSettings {
        replications: 50,
        methods: vec![
            Method::Scad,
            Method::HuberScad,
            Method::Mcp,
            Method::HuberMcp,
        ],
        ..BenchSettings::default()
    };
    let report = run_roc(&spec, &settings).unwrap();
    let auc = |m: Method| report.curves.iter().find(|c| c.method == m).unwrap().auc;
    let mcp_gap = auc(Method::HuberMcp) - auc(Method::Mcp);
    let scad_gap = auc(Method::HuberScad) - auc(Method::Scad);
    verdict(
        report.failures.is_empty() && mcp_gap >= 0.02 && scad_gap >= 0.02,
        format!(
            "AUC SCAD {:.4}, Huber-SCAD {:.4} (gap {scad_gap:.4}); MC+ {:.4}, Huber-MC+ {:.4} (gap {mcp_gap:.4}); need gaps >= 0.02",
            auc(Method::Scad),
            auc(Method::HuberScad),
            auc(Method::Mcp),
            auc(Method::HuberMcp)
        ),
    )
}

fn criterion_8() -> Verdict {
    let beta = [3.0, -2.0, 1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let data = gaussian(&mut rng(8), 400, &beta, 1.0);
    let loss = RobustLoss::huber(2.0).unwrap();
    let penalty = Penalty::new(PenaltyKind::scad(), 0.15).unwrap();
    let cfg = PipelineConfig::new(loss, penalty, 1, data.n());
    let first = irw_fit(&data, &cfg).unwrap();
    let weights = penalty.weight_vector(first.beta.view());
    let solver = SolverConfig {
        eps: 1e-6,
        ..SolverConfig::default()
    };
    let out = solve_weighted_l1(&data, &loss, weights.view(), first.beta.view(), &solver).unwrap();
    let eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut points = Vec::new();
    for e in eps {
        let Some(k) = out.trace.iterations.iter().position(|r| r.omega <= e) else {
            return verdict(false, format!("stage 2 never reached eps {e:e}"));
        };
        points.push(((1.0 / e).ln(), (k + 1) as f64));
    }
    let m = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    let counts: Vec<usize> = points.iter().map(|p| p.1 as usize).collect();
    verdict(
        r2 >= 0.9,
        format!("iterations {counts:?}, R^2 {r2:.4} (need 0.9)"),
    )
}

fn run_irw(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_irw"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn dirs_identical(a: &Path, b: &Path) -> Result<usize, String> {
    let mut files = 0;
    for entry in fs::read_dir(a).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let (x, y) = (fs::read(a.join(&name)), fs::read(b.join(&name)));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => files += 1,
            _ => return Err(format!("{} differs", a.join(&name).display())),
        }
    }
    Ok(files)
}

fn criterion_9() -> Verdict {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path();
    let p = |s: &str| root.join(s).to_str().unwrap().to_string();
    let scenario = r#"{"n": 60, "d": 15, "beta_star": [3,2,-2,0,0,0,0,0,0,0,0,0,0,0,0], "model": "homoscedastic",
        "error": {"family": "sgt", "mu": 0.0, "sigma2": 5.0, "lambda": 0.75, "p": 2.0, "q": 2.5}, "seed": 11}"#;
    fs::write(root.join("scenario.json"), scenario).unwrap();
    fs::write(
        root.join("bench.json"),
        format!(
            r#"{{"scenarios": [{scenario}], "settings": {{"replications": 3, "n_lambda": 12}}}}"#
        ),
    )
    .unwrap();
    fs::write(
        root.join("roc.json"),
        format!(r#"{{"scenario": {scenario}, "settings": {{"replications": 3, "n_lambda": 12}}}}"#),
    )
    .unwrap();
    if let Err(e) = run_irw(&[
        "simulate",
        "--config",
        &p("scenario.json"),
        "--out",
        &p("sim"),
    ]) {
        return verdict(false, e);
    }
    let data = p("sim/data.csv");
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["--config".into(), p("scenario.json")]),
        (
            "fit",
            vec![
                "--data".into(),
                data.clone(),
                "--lambda".into(),
                "0.2".into(),
                "--penalty".into(),
                "mcp".into(),
            ],
        ),
        (
            "cv",
            vec![
                "--data".into(),
                data.clone(),
                "--n-lambda".into(),
                "10".into(),
                "--seed".into(),
                "4".into(),
            ],
        ),
        (
            "path",
            vec![
                "--data".into(),
                data.clone(),
                "--n-lambda".into(),
                "10".into(),
            ],
        ),
        ("bench", vec!["--config".into(), p("bench.json")]),
        ("roc", vec!["--config".into(), p("roc.json")]),
    ];
    let mut files = 0;
    for (cmd, args) in &commands {
        for run in ["a", "b"] {
            let out = p(&format!("{cmd}-{run}"));
            let mut full: Vec<&str> = vec![cmd];
            full.extend(args.iter().map(String::as_str));
            full.extend(["--out", &out]);
            if let Err(e) = run_irw(&full) {
                return verdict(false, e);
            }
        }
        match dirs_identical(
            &root.join(format!("{cmd}-a")),
            &root.join(format!("{cmd}-b")),
        ) {
            Ok(k) => files += k,
            Err(e) => return verdict(false, e),
        }
    }
    verdict(
        true,
        format!("{files} output files byte-identical across reruns of all six commands"),
    )
}

type Criterion = (usize, &'static str, Duration, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            1,
            "solver matches coordinate-descent lasso",
            Duration::from_secs(5),
            criterion_1,
        ),
        (
            2,
            "monotone objective and majorization",
            Duration::from_secs(30),
            criterion_2,
        ),
        (
            3,
            "loss derivatives match finite differences",
            Duration::from_secs(1),
            criterion_3,
        ),
        (4, "loss bound suite", Duration::from_secs(1), criterion_4),
        (
            5,
            "strong oracle recovery",
            Duration::from_secs(60),
            criterion_5,
        ),
        (
            6,
            "lognormal benchmark",
            Duration::from_secs(600),
            criterion_6,
        ),
        (
            7,
            "ROC ordering under heavy tails",
            Duration::from_secs(600),
            criterion_7,
        ),
        (
            8,
            "linear rate in stage two",
            Duration::from_secs(5),
            criterion_8,
        ),
        (9, "CLI determinism", Duration::from_secs(60), criterion_9),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {id} ({name}): {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
