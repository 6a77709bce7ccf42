use std::path::Path;

use irw_core::pipeline::default_stage_count;
use irw_core::simulation::{generate, run_benchmark, run_roc, ScenarioSpec};
use irw_core::tuning::{lambda_path, pilot_tau_grid, tau_center};
use irw_core::{
    cv_fit, fit_path, irw_fit, lasso_pilot, Dataset, FitResult, Penalty, PenaltyKind,
    PipelineConfig, RobustLoss,
};
use serde::Serialize;

use crate::config::{load_json, BenchConfig, ModelConfig, RocConfig};
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, fmt_f64, fmt_opt, read_table, write_json, write_lines, CsvOut};
use crate::{ModelArgs, SimArgs};

const INTERCEPT_NAME: &str = "(intercept)";

fn resolve_model(args: &ModelArgs) -> CliResult<ModelConfig> {
    let mut cfg: ModelConfig = match &args.config {
        Some(p) => load_json(p)?,
        None => ModelConfig::default(),
    };
    if let Some(l) = args.loss {
        cfg.loss = l;
    }
    match (&args.penalty, args.penalty_a) {
        (Some(name), a) => cfg.penalty = PenaltyKind::parse_with_shape(name, a)?,
        (None, Some(a)) => {
            cfg.penalty = PenaltyKind::parse_with_shape(cfg.penalty.name(), Some(a))?
        }
        (None, None) => {}
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                cfg.$field = Some(v);
            }
        )*};
    }
    take!(tau, lambda, stages, lambda_ratio);
    if let Some(v) = args.s_hint {
        cfg.s_hint = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.cv_folds {
        cfg.cv_folds = v;
    }
    if let Some(v) = args.n_lambda {
        cfg.n_lambda = v;
    }
    if let Some(v) = args.cv_score {
        cfg.cv_score = v;
    }
    cfg.intercept |= args.intercept;
    cfg.validate()?;
    Ok(cfg)
}

struct Input {
    data: Dataset,
    names: Vec<String>,
}

fn load_data(path: &Path, intercept: bool) -> CliResult<Input> {
    let table = read_table(path)?;
    let mut data = Dataset::new(table.y, table.x)?;
    let mut names = table.feature_names;
    if intercept {
        data = data.with_intercept();
        names.insert(0, INTERCEPT_NAME.to_string());
    }
    Ok(Input { data, names })
}

/// Fill in `tau` from the Lasso pilot and `stages` from the heuristic.
fn resolve_tau_and_stages(cfg: &mut ModelConfig, data: &Dataset) -> CliResult<()> {
    if cfg.tau.is_none() {
        let (_, sigma) = lasso_pilot(data, &cfg.cv_settings())?;
        cfg.tau = Some(tau_center(sigma, data.n(), data.d()));
    }
    if cfg.stages.is_none() {
        cfg.stages = Some(default_stage_count(cfg.s_hint, data.d()));
    }
    Ok(())
}

fn template(cfg: &ModelConfig, data: &Dataset, tau: f64, lambda: f64) -> CliResult<PipelineConfig> {
    let loss = RobustLoss::new(cfg.loss, tau)?;
    let penalty = Penalty::new(cfg.penalty, lambda)?;
    Ok(PipelineConfig::new(
        loss,
        penalty,
        cfg.stages.expect("resolved"),
        data.n(),
    ))
}

fn write_coefficients(path: &Path, names: &[String], fit: &FitResult) -> CliResult<()> {
    let mut out = CsvOut::create(path, &["index", "name", "beta"])?;
    for (j, (name, b)) in names.iter().zip(fit.beta.iter()).enumerate() {
        out.row([j.to_string(), name.clone(), fmt_f64(*b)])?;
    }
    out.finish()
}

#[derive(Serialize)]
struct StageTrace<'a> {
    stage: usize,
    iterations: usize,
    converged: bool,
    omega: f64,
    initial_objective: f64,
    initial_omega: f64,
    objective: Vec<f64>,
    omega_trace: Vec<f64>,
    phi: Vec<f64>,
    backtracks: Vec<usize>,
    weights: &'a [f64],
}

#[derive(Serialize)]
struct FitTrace<'a> {
    converged: bool,
    early_stop: bool,
    active_set: &'a [usize],
    total_iterations: usize,
    stages: Vec<StageTrace<'a>>,
}

fn write_trace(path: &Path, fit: &FitResult) -> CliResult<()> {
    let stages = fit
        .stages
        .iter()
        .map(|s| StageTrace {
            stage: s.stage,
            iterations: s.iterations,
            converged: s.converged,
            omega: s.omega,
            initial_objective: s.trace.initial_objective,
            initial_omega: s.trace.initial_omega,
            objective: s.trace.iterations.iter().map(|r| r.objective).collect(),
            omega_trace: s.trace.iterations.iter().map(|r| r.omega).collect(),
            phi: s.trace.iterations.iter().map(|r| r.phi).collect(),
            backtracks: s.trace.iterations.iter().map(|r| r.backtracks).collect(),
            weights: s.weights.as_slice().expect("contiguous"),
        })
        .collect();
    write_json(
        path,
        &FitTrace {
            converged: fit.converged,
            early_stop: fit.early_stop,
            active_set: &fit.active_set,
            total_iterations: fit.total_iterations(),
            stages,
        },
    )
}

fn convergence_status(fit: &FitResult, what: &str) -> CliResult<()> {
    if fit.converged {
        Ok(())
    } else {
        let worst = fit.stages.iter().map(|s| s.omega).fold(0.0_f64, f64::max);
        Err(CliError::Numerical(format!(
            "{what} hit the iteration cap before reaching its tolerance (largest stage omega {worst:e}); outputs were written"
        )))
    }
}

pub fn fit(args: &ModelArgs) -> CliResult<()> {
    let mut cfg = resolve_model(args)?;
    let lambda = cfg
        .lambda
        .ok_or_else(|| CliError::input("fit needs --lambda (use `irw cv` to choose one)"))?;
    let input = load_data(&args.data, cfg.intercept)?;
    resolve_tau_and_stages(&mut cfg, &input.data)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &cfg)?;

    let pc = template(&cfg, &input.data, cfg.tau.expect("resolved"), lambda)?;
    let fit = irw_fit(&input.data, &pc)?;
    write_coefficients(&args.out.join("coefficients.csv"), &input.names, &fit)?;
    write_trace(&args.out.join("trace.json"), &fit)?;
    convergence_status(&fit, "fit")
}

#[derive(Serialize)]
struct CvChoice<'a> {
    lambda: f64,
    tau: f64,
    lambda_index: usize,
    tau_index: usize,
    score: irw_core::CvScore,
    best_score: f64,
    sigma_hat: Option<f64>,
    taus: &'a [f64],
    nonconverged_fits: usize,
}

pub fn cv(args: &ModelArgs) -> CliResult<()> {
    let mut cfg = resolve_model(args)?;
    let input = load_data(&args.data, cfg.intercept)?;
    let data = &input.data;
    if cfg.stages.is_none() {
        cfg.stages = Some(default_stage_count(cfg.s_hint, data.d()));
    }
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &cfg)?;

    let settings = cfg.cv_settings();
    let (taus, sigma_hat) = match cfg.tau {
        Some(t) => (vec![t], None),
        None => {
            let (taus, sigma) = pilot_tau_grid(data, &settings)?;
            (taus, Some(sigma))
        }
    };
    let pc = template(&cfg, data, taus[0], 1.0)?;
    let tuned = cv_fit(data, &pc, taus, &settings, false)?;
    let cv = &tuned.cv;

    let mut header = vec![
        "tau_index".to_string(),
        "tau".into(),
        "lambda_index".into(),
        "lambda".into(),
        "score".into(),
    ];
    header.extend((1..=cfg.cv_folds).map(|f| format!("fold_{f}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut grid_out = CsvOut::create(&args.out.join("cv_grid.csv"), &header_refs)?;
    for (t, tau) in tuned.grid.taus.iter().enumerate() {
        for (l, lambda) in tuned.grid.lambdas.iter().enumerate() {
            let mut row = vec![
                t.to_string(),
                fmt_f64(*tau),
                l.to_string(),
                fmt_f64(*lambda),
                fmt_f64(cv.mean_loss[t][l]),
            ];
            row.extend(cv.fold_loss[t].iter().map(|f| fmt_f64(f[l])));
            grid_out.row(row)?;
        }
    }
    grid_out.finish()?;
    write_json(
        &args.out.join("cv_choice.json"),
        &CvChoice {
            lambda: cv.lambda,
            tau: cv.tau,
            lambda_index: cv.lambda_index,
            tau_index: cv.tau_index,
            score: cv.score,
            best_score: cv.mean_loss[cv.tau_index][cv.lambda_index],
            sigma_hat,
            taus: &tuned.grid.taus,
            nonconverged_fits: cv.nonconverged_fits,
        },
    )?;
    write_coefficients(&args.out.join("coefficients.csv"), &input.names, &tuned.fit)?;
    write_trace(&args.out.join("trace.json"), &tuned.fit)?;
    convergence_status(&tuned.fit, "refit at the chosen (lambda, tau)")
}

pub fn path(args: &ModelArgs) -> CliResult<()> {
    let mut cfg = resolve_model(args)?;
    let input = load_data(&args.data, cfg.intercept)?;
    let data = &input.data;
    resolve_tau_and_stages(&mut cfg, data)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &cfg)?;

    let pc = template(&cfg, data, cfg.tau.expect("resolved"), 1.0)?;
    let ratio = cfg
        .lambda_ratio
        .unwrap_or_else(|| irw_core::tuning::default_lambda_ratio(data.n(), data.d()));
    let lambdas = lambda_path(data, &pc.loss, cfg.n_lambda, ratio)?;
    let fits = fit_path(data, &pc, &lambdas)?;

    let mut header = vec!["lambda", "df", "converged"];
    header.extend(input.names.iter().map(String::as_str));
    let mut out = CsvOut::create(&args.out.join("path.csv"), &header)?;
    for (lambda, fit) in lambdas.iter().zip(&fits) {
        let mut row = vec![
            fmt_f64(*lambda),
            fit.active_set.len().to_string(),
            fit.converged.to_string(),
        ];
        row.extend(fit.beta.iter().map(|b| fmt_f64(*b)));
        out.row(row)?;
    }
    out.finish()?;
    let nonconverged = fits.iter().filter(|f| !f.converged).count();
    if nonconverged > 0 {
        return Err(CliError::Numerical(format!(
            "{nonconverged} of {} path fits hit the iteration cap; outputs were written",
            fits.len()
        )));
    }
    Ok(())
}

pub fn simulate(args: &SimArgs) -> CliResult<()> {
    let mut spec: ScenarioSpec = load_json(&args.config)?;
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    spec.validate()?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &spec)?;
    let data = generate(&spec)?;

    let mut header = vec!["y".to_string()];
    header.extend((1..=spec.d).map(|j| format!("x{j}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::create(&args.out.join("data.csv"), &header_refs)?;
    for (i, y) in data.y().iter().enumerate() {
        let mut row = vec![fmt_f64(*y)];
        row.extend(data.x().row(i).iter().map(|v| fmt_f64(*v)));
        out.row(row)?;
    }
    out.finish()?;
    let mut beta = CsvOut::create(&args.out.join("beta_star.csv"), &["index", "beta"])?;
    for (j, b) in spec.beta_star.iter().enumerate() {
        beta.row([j.to_string(), fmt_f64(*b)])?;
    }
    beta.finish()
}

fn apply_sim_overrides(args: &SimArgs, scenarios: &mut [ScenarioSpec], reps: &mut usize) {
    if let Some(s) = args.seed {
        for spec in scenarios {
            spec.seed = s;
        }
    }
    if let Some(r) = args.replications {
        *reps = r;
    }
}

fn failure_lines(failures: &[irw_core::simulation::ReplicationFailure]) -> Vec<String> {
    failures
        .iter()
        .map(|f| {
            let method = f.method.map(|m| m.label()).unwrap_or("-");
            format!(
                "scenario={} replication={} method={} error={}",
                f.scenario, f.replication, method, f.message
            )
        })
        .collect()
}

pub fn bench(args: &SimArgs) -> CliResult<()> {
    let mut cfg: BenchConfig = load_json(&args.config)?;
    apply_sim_overrides(args, &mut cfg.scenarios, &mut cfg.settings.replications);
    if cfg.scenarios.is_empty() {
        return Err(CliError::input("bench config lists no scenarios"));
    }
    cfg.settings.validate()?;
    for s in &cfg.scenarios {
        s.validate()?;
    }
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &cfg)?;

    let report = run_benchmark(&cfg.scenarios, &cfg.settings)?;
    let mut out = CsvOut::create(
        &args.out.join("bench.csv"),
        &[
            "model",
            "error_dist",
            "method",
            "TP_mean",
            "TP_sd",
            "FP_mean",
            "FP_sd",
            "RE1_mean",
            "RE1_sd",
            "RE2_mean",
            "RE2_sd",
        ],
    )?;
    for r in &report.rows {
        out.row([
            r.model.clone(),
            r.error_dist.clone(),
            r.method.label().to_string(),
            fmt_f64(r.tp_mean),
            fmt_f64(r.tp_sd),
            fmt_f64(r.fp_mean),
            fmt_f64(r.fp_sd),
            fmt_f64(r.re1_mean),
            fmt_opt(r.re1_sd),
            fmt_f64(r.re2_mean),
            fmt_opt(r.re2_sd),
        ])?;
    }
    out.finish()?;
    write_lines(
        &args.out.join("failures.log"),
        &failure_lines(&report.failures),
    )
}

pub fn roc(args: &SimArgs) -> CliResult<()> {
    let mut cfg: RocConfig = load_json(&args.config)?;
    apply_sim_overrides(
        args,
        std::slice::from_mut(&mut cfg.scenario),
        &mut cfg.settings.replications,
    );
    cfg.settings.validate()?;
    cfg.scenario.validate()?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &cfg)?;

    let report = run_roc(&cfg.scenario, &cfg.settings)?;
    let mut out = CsvOut::create(
        &args.out.join("roc.csv"),
        &["method", "lambda", "fpr", "tpr"],
    )?;
    for c in &report.curves {
        for p in &c.points {
            out.row([
                c.method.label().to_string(),
                fmt_f64(p.lambda),
                fmt_f64(p.fpr),
                fmt_f64(p.tpr),
            ])?;
        }
    }
    out.finish()?;
    let mut auc = CsvOut::create(
        &args.out.join("auc.csv"),
        &["method", "auc", "replications"],
    )?;
    for c in &report.curves {
        auc.row([
            c.method.label().to_string(),
            fmt_f64(c.auc),
            c.replications.to_string(),
        ])?;
    }
    auc.finish()?;
    write_lines(
        &args.out.join("failures.log"),
        &failure_lines(&report.failures),
    )
}
