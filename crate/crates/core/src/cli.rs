//! Batch commands behind the `rigidity-lab` binary.
//!
//! Each command writes into `<out>/<command>/` and overwrites what is there.
//! Exit codes: 0 success (including per-orbit failures, which are logged in
//! the report), 2 configuration error, 3 runtime error.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    entropy_experiment, pinched_extremal_check, rigidity_experiment, spread_trend, EntropyReport,
    Extremal, ExtremalReport, ExtremalTolerances, RigidityReport, SpreadTrend,
};
use crate::chains::{case1_from_solution, case2_from_solution, Case1Report, Case2Report};
use crate::config::{ConfigError, ExperimentConfig};
use crate::hyperbolic::{census_csv, census_growth, enumerate_classes, GroupSpec, GrowthFit};
use crate::lyapunov::{lyapunov_with_solution, LyapunovReport};
use crate::metric::MetricSpec;
use crate::profile::PinchingBounds;
use crate::riccati::{default_settle_horizon, stable_solution_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Census,
    Rigidity,
    Entropy,
    Riccati,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Census => "census",
            Command::Rigidity => "rigidity",
            Command::Entropy => "entropy",
            Command::Riccati => "riccati",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(runtime)?;
    s.push('\n');
    write(dir, name, &s)
}

fn command_dir(cfg: &ExperimentConfig, cmd: Command) -> PathBuf {
    cfg.output_dir().join(cmd.name())
}

/// Load the config, apply overrides, and run `cmd`. Returns the written files.
pub fn run(cmd: Command, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = ExperimentConfig::load(&opts.config)?;
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
        cfg.base_dir = PathBuf::new();
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    with_threads(opts.threads, || match cmd {
        Command::Census => cmd_census(&cfg),
        Command::Rigidity => cmd_rigidity(&cfg),
        Command::Entropy => cmd_entropy(&cfg),
        Command::Riccati => cmd_riccati(&cfg),
    })
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<R, CliError> + Send,
) -> Result<R, CliError> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(runtime)?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R>(
    _threads: Option<usize>,
    f: impl FnOnce() -> Result<R, CliError>,
) -> Result<R, CliError> {
    f()
}

#[derive(Serialize)]
struct CensusSummary {
    group: GroupSpec,
    max_word_length: usize,
    classes: usize,
    growth: Option<GrowthFit>,
}

pub fn cmd_census(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let group = cfg.group()?;
    let l = cfg.census.max_word_length;
    let classes = enumerate_classes(&group, l).map_err(runtime)?;
    let dir = command_dir(cfg, Command::Census);
    let summary = CensusSummary {
        group: cfg.group,
        max_word_length: l,
        classes: classes.len(),
        growth: census_growth(&group, &classes, l),
    };
    Ok(vec![
        write(&dir, "census.csv", &census_csv(&classes))?,
        write_json(&dir, "census.json", &summary)?,
    ])
}

#[derive(Serialize)]
struct RigiditySection {
    #[serde(flatten)]
    report: RigidityReport,
    extremal_lower: ExtremalReport,
    extremal_upper: ExtremalReport,
}

#[derive(Serialize)]
struct RigidityOutput {
    group: GroupSpec,
    metric: MetricSpec,
    max_word_length: usize,
    sections: Vec<RigiditySection>,
    trend: SpreadTrend,
}

pub fn cmd_rigidity(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let metric = cfg.metric()?;
    let rc = cfg.rigidity_config();
    let dir = command_dir(cfg, Command::Rigidity);
    let ext_tol = ExtremalTolerances::default();
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for &eps in &cfg.rigidity.epsilons {
        let m = metric.with_epsilon(eps);
        let report =
            rigidity_experiment(&m, &rc).map_err(|e| runtime(format!("epsilon {eps}: {e}")))?;
        for f in &report.failures {
            log::warn!("epsilon {eps}: class {} failed: {}", f.word, f.error);
        }
        files.push(write(
            &dir,
            &format!("orbits_eps{eps}.csv"),
            &report.orbit_csv(),
        )?);
        reports.push(report);
    }
    let trend = spread_trend(&reports, rc.tol);
    let sections = reports
        .into_iter()
        .map(|report| RigiditySection {
            extremal_lower: pinched_extremal_check(&report, Extremal::Lower, &ext_tol),
            extremal_upper: pinched_extremal_check(&report, Extremal::Upper, &ext_tol),
            report,
        })
        .collect();
    let out = RigidityOutput {
        group: cfg.group,
        metric: cfg.metric.clone(),
        max_word_length: rc.max_word_length,
        sections,
        trend,
    };
    files.push(write_json(&dir, "report.json", &out)?);
    Ok(files)
}

#[derive(Serialize)]
struct EntropyOutput {
    group: GroupSpec,
    seed: u64,
    horizon: f64,
    settle: f64,
    #[serde(flatten)]
    report: EntropyReport,
}

pub fn cmd_entropy(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let metric = cfg.metric()?;
    let ec = cfg.entropy_config();
    let report = entropy_experiment(&metric, &ec).map_err(runtime)?;
    if let Some(c) = &report.caveat {
        log::info!("{c}");
    }
    let out = EntropyOutput {
        group: cfg.group,
        seed: cfg.seed,
        horizon: ec.horizon,
        settle: ec.settle,
        report,
    };
    Ok(vec![write_json(
        &command_dir(cfg, Command::Entropy),
        "report.json",
        &out,
    )?])
}

#[derive(Serialize)]
struct RiccatiOutput {
    bounds: Option<PinchingBounds>,
    lyapunov: LyapunovReport,
    unstable_residual: f64,
    stable_residual: f64,
    unstable_range: [f64; 2],
    stable_range: [f64; 2],
    case1: Case1Report,
    case2: Case2Report,
}

pub fn cmd_riccati(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    if cfg.riccati.is_none() {
        return Err(ConfigError::Invalid {
            key: "riccati".into(),
            message: "section missing".into(),
        }
        .into());
    }
    let profile = cfg
        .riccati_profile()
        .map_err(|e| match e.downcast::<ConfigError>() {
            Ok(c) => CliError::Config(*c),
            Err(e) => runtime(e),
        })?;
    let spec = cfg.riccati.as_ref().expect("checked above");
    let mut lc = cfg.tolerances.lyapunov();
    lc.settle_horizon = spec.settle_horizon;
    let (lyapunov, unstable) = lyapunov_with_solution(&profile, &lc).map_err(runtime)?;
    let settle = spec
        .settle_horizon
        .unwrap_or_else(|| default_settle_horizon(&profile));
    let stable =
        stable_solution_with(&profile, settle, lc.periodicity_tol, &lc.step).map_err(runtime)?;
    let bounds = profile.bounds();
    let (b, c) = bounds.map_or((0.0, 0.0), |p| (p.b, p.c));
    let case1 = case1_from_solution(&profile, &unstable, b, cfg.tolerances.chain);
    let case2 =
        case2_from_solution(&profile, &unstable, c, cfg.tolerances.chain).map_err(runtime)?;
    let (ul, uh) = unstable.eigen_range();
    let (sl, sh) = stable.eigen_range();
    let dir = command_dir(cfg, Command::Riccati);
    let out = RiccatiOutput {
        bounds,
        lyapunov,
        unstable_residual: unstable.residual,
        stable_residual: stable.residual,
        unstable_range: [ul, uh],
        stable_range: [sl, sh],
        case1,
        case2,
    };
    Ok(vec![
        write(&dir, "unstable.csv", &unstable.to_csv())?,
        write(&dir, "stable.csv", &stable.to_csv())?,
        write_json(&dir, "report.json", &out)?,
    ])
}
