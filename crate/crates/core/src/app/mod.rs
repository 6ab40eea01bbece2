//! Command-line front end.

pub mod config;
pub mod data;
pub mod presets;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::frac::{build_reference_model, ReferenceModel};
use crate::freq::{
    bode, default_band, estimated_flatness, estimated_margins, flatness_metric, implied_open_loop, log_grid,
    loop_margins, Margins, DEFAULT_GRID_POINTS,
};
use crate::sim::{
    closed_loop_sim, impulse_response, lfilter, step_metrics, toeplitz_mul_samples, ExperimentData, Signal, StepMetrics,
};
use crate::tf::DiscreteTf;
use crate::tuning::{
    build_controller, gain_robustness_report, stability_screen, tune, LossEvaluator, RobustnessRow, Verdict,
    J_THRESHOLD_FACTOR,
};

pub use config::TuneConfig;

const HALF_DECADE: f64 = 3.162_277_660_168_379_5;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("bad data: {0}")]
    BadData(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] crate::Error),
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "isotune",
    version,
    about = "One-shot data-driven tuning of fractional-order controllers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in configuration (see `preset list`).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Experiment CSV with columns k,t,r,u,y.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the swarm seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for loss evaluation; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the initial closed-loop experiment on the configured plant.
    Collect,
    /// Tune the controller from experiment data.
    Tune,
    /// Evaluate a parameter vector: step, Bode and gain-robustness data.
    Evaluate {
        /// Comma-separated parameter vector.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        /// Named parameter vector from the configuration's baselines.
        #[arg(long, conflicts_with = "theta")]
        baseline: Option<String>,
    },
    /// Build the reference model and report its responses and poles.
    Reference,
    /// Built-in configurations.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset as TOML.
    Show { name: String },
}

/// Process exit status: 0 success, 2 tuned but not screened as stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Status(pub u8);

pub fn run(cli: Cli) -> Result<Status, AppError> {
    if let Command::Preset { action } = &cli.command {
        return preset_command(action);
    }
    let mut cfg = load_config(&cli)?;
    if let Some(seed) = cli.seed {
        cfg.pso.seed = seed;
    }
    let ctx = Context::new(&cli, &cfg);
    let body = || match &cli.command {
        Command::Collect => collect(&cfg, &ctx),
        Command::Tune => tune_command(&cfg, &ctx, cli.threads),
        Command::Evaluate { theta, baseline } => evaluate(&cfg, &ctx, theta.as_deref(), baseline.as_deref()),
        Command::Reference => reference(&cfg, &ctx),
        Command::Preset { .. } => unreachable!("handled above"),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AppError::Config(format!("--threads: {e}")))?
            .install(body),
        None => body(),
    }
}

fn preset_command(action: &PresetAction) -> Result<Status, AppError> {
    match action {
        PresetAction::List => {
            for (name, about) in presets::PRESETS {
                println!("{name:<12}  {about}");
            }
        }
        PresetAction::Show { name } => {
            let cfg = presets::preset(name).ok_or_else(|| unknown_preset(name))?;
            print!("{}", cfg.to_toml());
        }
    }
    Ok(Status(0))
}

fn unknown_preset(name: &str) -> AppError {
    let names: Vec<&str> = presets::PRESETS.iter().map(|p| p.0).collect();
    AppError::Config(format!("unknown preset {name:?}; available: {}", names.join(", ")))
}

fn load_config(cli: &Cli) -> Result<TuneConfig, AppError> {
    match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => Err(AppError::Config("--config and --preset are mutually exclusive".into())),
        (Some(path), None) => TuneConfig::load(path),
        (None, Some(name)) => presets::preset(name).ok_or_else(|| unknown_preset(name)),
        (None, None) => Err(AppError::Config("one of --config or --preset is required".into())),
    }
}

struct Context {
    out: PathBuf,
    data: Option<PathBuf>,
}

impl Context {
    fn new(cli: &Cli, cfg: &TuneConfig) -> Self {
        Self {
            out: cli
                .out
                .clone()
                .or_else(|| cfg.paths.out.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            data: cli.data.clone().or_else(|| cfg.paths.data.clone()),
        }
    }

    fn data_path(&self) -> PathBuf {
        self.data.clone().unwrap_or_else(|| self.out.join("data.csv"))
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn require_plant(cfg: &TuneConfig, what: &str) -> Result<DiscreteTf, AppError> {
    cfg.plant()?
        .ok_or_else(|| AppError::Config(format!("{what} needs a [plant] section")))
}

fn collect(cfg: &TuneConfig, ctx: &Context) -> Result<Status, AppError> {
    let plant = require_plant(cfg, "collect")?;
    let c = build_controller(&cfg.controller_spec(&cfg.controller.theta0)?)?;
    let r = Signal::step(cfg.samples(), cfg.experiment.amplitude, cfg.ts)?;
    let (u, y) = closed_loop_sim(&plant, &c, &r)?;
    let data = ExperimentData::new(r, u, y)?;
    let path = ctx.data_path();
    data::write_experiment(&path, &data)?;
    println!("wrote {} samples to {}", data.len(), path.display());
    Ok(Status(0))
}

#[derive(Debug, Serialize)]
struct ReferenceSummary {
    gamma: f64,
    max_pole_radius: f64,
    l_flat_margins: Option<Margins>,
    l_flat_flatness: Option<f64>,
}

fn reference_summary(cfg: &TuneConfig, model: &ReferenceModel) -> ReferenceSummary {
    let margins = loop_margins(&model.l_flat, default_band(cfg.ts)).ok();
    ReferenceSummary {
        gamma: cfg.reference_spec().map(|s| s.gamma()).unwrap_or(f64::NAN),
        max_pole_radius: model.pole_radii.first().copied().unwrap_or(0.0),
        l_flat_flatness: margins.and_then(|m| flatness_metric(&model.l_flat, m.omega_c, HALF_DECADE).ok()),
        l_flat_margins: margins,
    }
}

#[derive(Debug, Serialize)]
struct ResultSummary {
    structure: crate::tuning::Structure,
    parameter_names: &'static [&'static str],
    theta_star: Vec<f64>,
    j_star: f64,
    j_threshold: f64,
    verdict: Verdict,
    evaluations: usize,
    history: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Estimates {
    margins: Option<Margins>,
    flatness: Option<f64>,
    step: Option<StepMetrics>,
    reference_step: Option<StepMetrics>,
}

#[derive(Debug, Serialize)]
struct Validation {
    margins: Option<Margins>,
    flatness: Option<f64>,
    robustness: Vec<RobustnessRow>,
}

#[derive(Debug, Serialize)]
struct ReportBody {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config: TuneConfig,
    samples: usize,
    reference: ReferenceSummary,
    result: ResultSummary,
    estimated: Estimates,
    validation: Option<Validation>,
}

#[derive(Debug, Serialize)]
struct Sidecar {
    started_unix_seconds: u64,
    elapsed_seconds: f64,
    threads: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    report: ReportBody,
    sidecar: Sidecar,
}

fn load_data(cfg: &TuneConfig, ctx: &Context) -> Result<ExperimentData, AppError> {
    data::read_experiment(&ctx.data_path(), cfg.ts)
}

fn setpoint_metrics(y: &[f64], r: &[f64], ts: f64) -> Option<StepMetrics> {
    let sp = *r.last()?;
    step_metrics(&Signal::new(y.to_vec(), ts).ok()?, sp).ok()
}

fn estimates(evaluator: &LossEvaluator, theta: &[f64], restored: &[f64], ts: f64) -> Estimates {
    let r = evaluator.data().r().samples();
    let margins = estimated_margins(restored, ts, default_band(ts)).ok();
    Estimates {
        margins,
        flatness: margins.and_then(|m| estimated_flatness(restored, ts, m.omega_c, HALF_DECADE).ok()),
        step: evaluator
            .estimated_output(theta)
            .ok()
            .and_then(|y| setpoint_metrics(&y, r, ts)),
        reference_step: setpoint_metrics(evaluator.reference_output(), r, ts),
    }
}

fn validation(cfg: &TuneConfig, plant: &DiscreteTf, c: &DiscreteTf) -> Result<Validation, AppError> {
    let l = plant.mul(c)?;
    let margins = loop_margins(&l, default_band(cfg.ts)).ok();
    let r = Signal::step(cfg.samples(), cfg.experiment.amplitude, cfg.ts)?;
    Ok(Validation {
        margins,
        flatness: margins.and_then(|m| flatness_metric(&l, m.omega_c, HALF_DECADE).ok()),
        robustness: gain_robustness_report(plant, c, &cfg.evaluate.gains, &r)?,
    })
}

fn evaluator_for(cfg: &TuneConfig, data: ExperimentData, model: &ReferenceModel) -> Result<LossEvaluator, AppError> {
    let m = impulse_response(&model.m_ref, data.len())?;
    Ok(LossEvaluator::new(
        cfg.controller_spec(&cfg.controller.theta0)?,
        data,
        &m,
    )?)
}

fn write_restored(
    path: &Path,
    evaluator: &LossEvaluator,
    theta: &[f64],
    restored: &[f64],
    ts: f64,
) -> Result<(), AppError> {
    let n = evaluator.data().len();
    let t: Vec<f64> = (0..n).map(|k| k as f64 * ts).collect();
    let y_est = evaluator.estimated_output(theta).unwrap_or_else(|_| vec![f64::NAN; n]);
    let restored = if restored.len() == n {
        restored.to_vec()
    } else {
        vec![f64::NAN; n]
    };
    data::write_table(
        path,
        &["t", "restored_impulse", "m_ref", "y_estimated", "y_reference"],
        &[&t, &restored, evaluator.m_ref(), &y_est, evaluator.reference_output()],
    )
}

fn tune_command(cfg: &TuneConfig, ctx: &Context, threads: Option<usize>) -> Result<Status, AppError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let data = load_data(cfg, ctx)?;
    let model = build_reference_model(&cfg.reference_spec()?)?;
    let evaluator = evaluator_for(cfg, data, &model)?;
    let result = tune(
        &evaluator,
        &cfg.bounds()?,
        &cfg.pso,
        Some(&cfg.controller.theta0),
        cfg.j_threshold,
    )?;
    let theta = result.theta_star.clone();
    let estimated = estimates(&evaluator, &theta, &result.restored_impulse, cfg.ts);
    let validation = match cfg.plant()? {
        Some(p) => match build_controller(&cfg.controller_spec(&theta)?) {
            Ok(c) => Some(validation(cfg, &p, &c)?),
            Err(_) => None,
        },
        None => None,
    };
    write_restored(
        &ctx.file("restored_impulse.csv"),
        &evaluator,
        &theta,
        &result.restored_impulse,
        cfg.ts,
    )?;

    let mut echo = cfg.clone();
    echo.paths = Default::default();
    let verdict = result.verdict;
    let report = Report {
        report: ReportBody {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.pso.seed,
            config: echo,
            samples: evaluator.data().len(),
            reference: reference_summary(cfg, &model),
            result: ResultSummary {
                structure: cfg.controller.structure,
                parameter_names: cfg.controller.structure.parameter_names(),
                theta_star: result.theta_star,
                j_star: result.j_star,
                j_threshold: result.j_threshold,
                verdict,
                evaluations: result.evaluations,
                history: result.history,
            },
            estimated,
            validation,
        },
        sidecar: Sidecar {
            started_unix_seconds: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            elapsed_seconds: clock.elapsed().as_secs_f64(),
            threads: threads.unwrap_or_else(rayon::current_num_threads),
        },
    };
    let path = ctx.file("report.json");
    write_json(&path, &report)?;
    let names = cfg.controller.structure.parameter_names();
    let theta_txt: Vec<String> = names.iter().zip(&theta).map(|(n, v)| format!("{n}={v:.6}")).collect();
    println!(
        "J* = {:.6e}  verdict = {}  {}",
        report.report.result.j_star,
        verdict.as_str(),
        theta_txt.join(" ")
    );
    println!("report: {}", path.display());
    Ok(match verdict {
        Verdict::LikelyBibo => Status(0),
        Verdict::Suspect | Verdict::Rejected => Status(2),
    })
}

#[derive(Debug, Serialize)]
struct DataDriven {
    j: f64,
    verdict: Verdict,
    estimated: Estimates,
}

#[derive(Debug, Serialize)]
struct Evaluation {
    structure: crate::tuning::Structure,
    theta: Vec<f64>,
    reference: ReferenceSummary,
    validation: Option<Validation>,
    data_driven: Option<DataDriven>,
}

fn evaluate(
    cfg: &TuneConfig,
    ctx: &Context,
    theta: Option<&[f64]>,
    baseline: Option<&str>,
) -> Result<Status, AppError> {
    let theta: Vec<f64> = match (theta, baseline) {
        (Some(t), _) => t.to_vec(),
        (None, Some(name)) => cfg
            .evaluate
            .baselines
            .get(name)
            .cloned()
            .ok_or_else(|| AppError::Config(format!("no baseline named {name:?} in [evaluate.baselines]")))?,
        (None, None) => cfg.controller.theta0.clone(),
    };
    let c = build_controller(&cfg.controller_spec(&theta)?)?;
    let model = build_reference_model(&cfg.reference_spec()?)?;
    let grid = log_grid(default_band(cfg.ts).0, default_band(cfg.ts).1, DEFAULT_GRID_POINTS);
    let ref_bode = bode(&model.l_flat, &grid)?;
    let plant = cfg.plant()?;

    let mut val = None;
    if let Some(p) = &plant {
        val = Some(validation(cfg, p, &c)?);
        let r = Signal::step(cfg.samples(), cfg.experiment.amplitude, cfg.ts)?;
        let t: Vec<f64> = (0..r.len()).map(|k| k as f64 * cfg.ts).collect();
        let mut cols: Vec<Vec<f64>> = vec![t, r.samples().to_vec()];
        let mut header = vec!["t".to_string(), "r".to_string()];
        for &g in &cfg.evaluate.gains {
            let (_, y) = closed_loop_sim(&p.scale(g), &c, &r)?;
            cols.push(y.into_samples());
            header.push(format!("y_gain_{g}"));
        }
        cols.push(lfilter(&model.m_ref, &r)?.into_samples());
        header.push("y_reference".into());
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
        data::write_table(&ctx.file("step.csv"), &hdr, &refs)?;

        let loop_bode = bode(&p.mul(&c)?, &grid)?;
        let rows: Vec<Vec<Option<f64>>> = loop_bode
            .iter()
            .zip(&ref_bode)
            .map(|(a, b)| {
                vec![
                    Some(a.omega),
                    Some(a.magnitude_db),
                    Some(a.phase_deg),
                    Some(b.magnitude_db),
                    Some(b.phase_deg),
                ]
            })
            .collect();
        data::write_rows(
            &ctx.file("bode.csv"),
            &[
                "omega",
                "loop_magnitude_db",
                "loop_phase_deg",
                "l_flat_magnitude_db",
                "l_flat_phase_deg",
            ],
            &rows,
        )?;
        let rows: Vec<Vec<Option<f64>>> = val
            .as_ref()
            .map(|v| {
                v.robustness
                    .iter()
                    .map(|r| {
                        vec![
                            Some(r.gain),
                            Some(r.overshoot_percent),
                            Some(r.settling_time),
                            Some(r.steady_state),
                            r.omega_c,
                            r.phi_m,
                        ]
                    })
                    .collect()
            })
            .unwrap_or_default();
        data::write_rows(
            &ctx.file("robustness.csv"),
            &[
                "gain",
                "overshoot_percent",
                "settling_time",
                "steady_state",
                "omega_c",
                "phi_m",
            ],
            &rows,
        )?;
    }

    let mut driven = None;
    if ctx.data.is_some() {
        let data = load_data(cfg, ctx)?;
        let evaluator = evaluator_for(cfg, data, &model)?;
        let j = evaluator.loss(&theta);
        let restored = evaluator.restore(&theta).unwrap_or_default();
        let threshold = cfg
            .j_threshold
            .unwrap_or(J_THRESHOLD_FACTOR * evaluator.reference_energy());
        write_restored(&ctx.file("estimated.csv"), &evaluator, &theta, &restored, cfg.ts)?;
        let est_rows: Vec<Vec<Option<f64>>> = grid
            .iter()
            .zip(&ref_bode)
            .map(|(&w, b)| {
                let v = implied_open_loop(&restored, cfg.ts, w)
                    .ok()
                    .filter(|_| !restored.is_empty());
                vec![
                    Some(w),
                    v.map(|v| 20.0 * v.norm().log10()),
                    v.map(|v| v.arg().to_degrees()),
                    Some(b.magnitude_db),
                    Some(b.phase_deg),
                ]
            })
            .collect();
        data::write_rows(
            &ctx.file("estimated_bode.csv"),
            &[
                "omega",
                "loop_magnitude_db",
                "loop_phase_deg_wrapped",
                "l_flat_magnitude_db",
                "l_flat_phase_deg",
            ],
            &est_rows,
        )?;
        driven = Some(DataDriven {
            j,
            verdict: stability_screen(&restored, j, threshold),
            estimated: estimates(&evaluator, &theta, &restored, cfg.ts),
        });
    }
    if plant.is_none() && driven.is_none() {
        return Err(AppError::Config(
            "evaluate needs a [plant] section or experiment data (--data)".into(),
        ));
    }

    let eval = Evaluation {
        structure: cfg.controller.structure,
        theta: theta.clone(),
        reference: reference_summary(cfg, &model),
        validation: val,
        data_driven: driven,
    };
    let path = ctx.file("evaluation.json");
    write_json(&path, &eval)?;
    if let Some(m) = eval.validation.as_ref().and_then(|v| v.margins) {
        println!("omega_c = {:.4} rad/s  phi_m = {:.4} deg", m.omega_c, m.phi_m);
    }
    if let Some(d) = &eval.data_driven {
        println!("J = {:.6e}  verdict = {}", d.j, d.verdict.as_str());
    }
    println!("evaluation: {}", path.display());
    Ok(Status(0))
}

#[derive(Debug, Serialize)]
struct ReferenceReport {
    summary: ReferenceSummary,
    pole_radii: Vec<f64>,
    step: Option<StepMetrics>,
}

fn reference(cfg: &TuneConfig, ctx: &Context) -> Result<Status, AppError> {
    let model = build_reference_model(&cfg.reference_spec()?)?;
    let n = cfg.samples();
    let h = impulse_response(&model.m_ref, n)?;
    let step = toeplitz_mul_samples(&vec![cfg.experiment.amplitude; n], h.samples())?;
    let t: Vec<f64> = (0..n).map(|k| k as f64 * cfg.ts).collect();
    data::write_table(
        &ctx.file("reference.csv"),
        &["t", "impulse", "step"],
        &[&t, h.samples(), &step],
    )?;
    let rep = ReferenceReport {
        summary: reference_summary(cfg, &model),
        pole_radii: model.pole_radii.clone(),
        step: Signal::new(step, cfg.ts)
            .ok()
            .and_then(|s| step_metrics(&s, cfg.experiment.amplitude).ok()),
    };
    let path = ctx.file("reference.json");
    write_json(&path, &rep)?;
    println!(
        "gamma = {:.6}  max pole radius = {:.10}  flatness = {}",
        rep.summary.gamma,
        rep.summary.max_pole_radius,
        rep.summary
            .l_flat_flatness
            .map_or("n/a".to_string(), |f| format!("{f:.4} deg/decade"))
    );
    println!("reference: {}", path.display());
    Ok(Status(0))
}
