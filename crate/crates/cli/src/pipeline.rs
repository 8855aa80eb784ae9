//! Experiment orchestration: discretize → design → simulate → analyze,
//! with all artifacts written as JSON/CSV for external plotting.
//!
//! CSV files use '.' decimals and full double precision (17 significant
//! digits) so golden files are stable on one platform.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use phs_control::{
    assemble_dynamic, assemble_reduced, discretize, gaussian_profile, poles, simulate,
    stability_margin, settle_time, ContinuousPlant, Controller, DiscretePlant, LinearPhsSystem,
    PhsError, PoleMeta, PoleSet, SimConfig, Trajectory,
};
use serde::Serialize;

use crate::config::{ActuationConfig, ExperimentConfig, ShapingConfig};

/// Settle band used for reporting (endpoint trace, fraction of its peak).
pub const SETTLE_BAND: f64 = 0.02;

#[derive(Debug)]
pub enum CliError {
    /// Unparsable configuration document (includes location).
    Parse(String),
    /// Configuration violates invariants (all violations listed).
    Config(Vec<String>),
    /// Filesystem failure.
    Io(String),
    /// Error raised by the toolkit itself.
    Core(PhsError),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Parse(m) | CliError::Io(m) => m.clone(),
            CliError::Config(list) => list.join("; "),
            CliError::Core(e) => e.to_string(),
        }
    }
}

impl From<PhsError> for CliError {
    fn from(e: PhsError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::Parse(format!(
            "{} at {}:{}:{}",
            e,
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    config.validate().map_err(CliError::Config)?;
    Ok(config)
}

pub fn build_plant(config: &ExperimentConfig) -> Result<ContinuousPlant, CliError> {
    Ok(ContinuousPlant::uniform_string(
        config.plant.length,
        config.plant.tension,
        config.plant.density,
        config.plant.dissipation,
    )?)
}

pub fn build_discrete(config: &ExperimentConfig) -> Result<DiscretePlant, CliError> {
    let plant = build_plant(config)?;
    Ok(discretize(
        &plant,
        config.discretization.p,
        config.discretization.gamma,
    )?)
}

fn energy_target(
    shaping: &ShapingConfig,
    plant: &DiscretePlant,
) -> Result<nalgebra::DMatrix<f64>, CliError> {
    match (&shaping.beta, &shaping.qm) {
        (Some(beta), None) => Ok(plant.uniform_energy_target(*beta)?),
        (None, Some(qm)) => Ok(qm.clone()),
        _ => Err(CliError::Config(vec![
            "shaping: exactly one of beta or qm is required".into(),
        ])),
    }
}

/// Designs the controller named by the config, or `None` for open loop.
pub fn build_controller(
    config: &ExperimentConfig,
    plant: &DiscretePlant,
) -> Result<Option<Controller>, CliError> {
    let Some(shaping) = &config.shaping else {
        return Ok(None);
    };
    let qm = energy_target(shaping, plant)?;
    let ctrl = match config.actuation {
        ActuationConfig::Full => Controller::design_fully_actuated(plant, qm, shaping.alpha)?,
        ActuationConfig::Patches { m } => {
            Controller::design_under_actuated(plant, m, qm, shaping.alpha)?
        }
    };
    Ok(Some(ctrl))
}

fn initial_strain(config: &ExperimentConfig) -> Result<DVector<f64>, CliError> {
    Ok(gaussian_profile(
        config.discretization.p,
        config.plant.length,
        config.initial_condition.mu,
        config.initial_condition.sigma2,
        config.initial_condition.amplitude,
    )?)
}

/// Assembles the simulated system: dynamic interconnection with a
/// Casimir-consistent controller state when a controller is present,
/// plain open loop otherwise. Returns the system and initial state.
pub fn build_simulation(
    config: &ExperimentConfig,
    plant: &DiscretePlant,
    ctrl: Option<&Controller>,
) -> Result<(LinearPhsSystem, DVector<f64>), CliError> {
    let p = plant.p;
    let x1d0 = initial_strain(config)?;
    match ctrl {
        Some(ctrl) => {
            let dynamic = assemble_dynamic(plant, ctrl)?;
            let xc0 = ctrl.casimir_consistent_init(plant, &x1d0)?;
            let x0 = dynamic.stack_state(&x1d0, &DVector::zeros(p), &xc0)?;
            Ok((dynamic.simulation_system(), x0))
        }
        None => {
            let mut x0 = DVector::zeros(2 * p);
            x0.rows_mut(0, p).copy_from(&x1d0);
            let system = LinearPhsSystem {
                a: plant.open_loop_matrix(),
                energy: plant.q_full(),
                p,
                casimir: None,
            };
            Ok((system, x0))
        }
    }
}

/// Analysis system: poles are taken on the reduced (state-feedback) form
/// when a controller is present, on the open loop otherwise.
pub fn analysis_poles(
    config: &ExperimentConfig,
    plant: &DiscretePlant,
    ctrl: Option<&Controller>,
) -> Result<PoleSet, CliError> {
    let matrix = match ctrl {
        Some(ctrl) => assemble_reduced(plant, ctrl)?.system_matrix(),
        None => plant.open_loop_matrix(),
    };
    let meta = PoleMeta {
        p: plant.p,
        m: ctrl.map_or(0, |c| c.m()),
        alpha: config.shaping.as_ref().map_or(0.0, |s| s.alpha),
        beta: config
            .shaping
            .as_ref()
            .and_then(|s| s.beta)
            .unwrap_or(0.0),
        gamma: plant.gamma,
    };
    Ok(poles(&matrix)?.with_meta(meta))
}

fn format_value(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory) -> Result<(), CliError> {
    let mut text = String::from("t,H,endpoint,casimir_norm\n");
    for i in 0..trajectory.len() {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            format_value(trajectory.times[i]),
            format_value(trajectory.hamiltonian[i]),
            format_value(trajectory.endpoint[i]),
            format_value(trajectory.casimir_norm[i]),
        );
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_state_snapshots(
    dir: &Path,
    trajectory: &Trajectory,
    plant: &DiscretePlant,
) -> Result<(), CliError> {
    let p = plant.p;
    for (index, state) in trajectory.states.iter().enumerate() {
        let mut text = String::from("zeta,x1,x2\n");
        for j in 0..p {
            let zeta = (j as f64 + 0.5) * plant.l_ab;
            let _ = writeln!(
                text,
                "{},{},{}",
                format_value(zeta),
                format_value(state[j]),
                format_value(state[p + j]),
            );
        }
        fs::write(dir.join(format!("state_{index}.csv")), text)?;
    }
    Ok(())
}

pub fn write_poles_csv(path: &Path, poleset: &PoleSet) -> Result<(), CliError> {
    let mut text = String::from("re,im\n");
    for s in &poleset.poles {
        let _ = writeln!(text, "{},{}", format_value(s.re), format_value(s.im));
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

/// Summary emitted by the full pipeline; every field is always populated.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub settle_time: f64,
    pub settled: bool,
    pub settle_band: f64,
    pub final_hamiltonian: f64,
    pub casimir_drift: f64,
    pub stability_margin: f64,
    pub residual: f64,
}

/// Full pipeline: writes `plant.json`, `controller.json` (when a
/// controller is designed), `trajectory.csv`, `poles.csv`,
/// `poles_meta.json` and `report.json` into `out_dir`.
pub fn run_pipeline(
    config: &ExperimentConfig,
    out_dir: &Path,
    stride_override: Option<usize>,
) -> Result<Report, CliError> {
    fs::create_dir_all(out_dir)?;
    let plant = build_discrete(config)?;
    write_json(&out_dir.join("plant.json"), &plant)?;

    let ctrl = build_controller(config, &plant)?;
    if let Some(ctrl) = &ctrl {
        write_json(&out_dir.join("controller.json"), ctrl)?;
    }

    let stride = stride_override.unwrap_or(config.output.stride);
    let sim_config = SimConfig::new(
        config.discretization.dt,
        config.discretization.t_final,
        stride,
    )?;
    let (system, x0) = build_simulation(config, &plant, ctrl.as_ref())?;
    let trajectory = simulate(&system, &x0, &sim_config)?;
    write_trajectory_csv(&out_dir.join("trajectory.csv"), &trajectory)?;
    if config.output.snapshots {
        write_state_snapshots(out_dir, &trajectory, &plant)?;
    }

    let poleset = analysis_poles(config, &plant, ctrl.as_ref())?;
    write_poles_csv(&out_dir.join("poles.csv"), &poleset)?;
    write_json(&out_dir.join("poles_meta.json"), &poleset.meta)?;

    let verdict = settle_time(&trajectory.times, &trajectory.endpoint, SETTLE_BAND)?;
    let report = Report {
        settle_time: verdict.time,
        settled: verdict.settled,
        settle_band: SETTLE_BAND,
        final_hamiltonian: trajectory.final_hamiltonian(),
        casimir_drift: trajectory.casimir_drift,
        stability_margin: stability_margin(&poleset)?,
        residual: ctrl.as_ref().map_or(0.0, |c| c.residual),
    };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

/// A `--sweep param=v1,v2,...` request.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<String>,
}

pub fn parse_sweep(spec: &str) -> Result<Sweep, CliError> {
    let (parameter, list) = spec.split_once('=').ok_or_else(|| {
        CliError::Config(vec![format!(
            "sweep must look like param=v1,v2,... got '{spec}'"
        )])
    })?;
    let values: Vec<String> = list
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect();
    if values.is_empty() {
        return Err(CliError::Config(vec![format!(
            "sweep '{spec}' lists no values"
        )]));
    }
    match parameter {
        "alpha" | "beta" | "m" | "p" => Ok(Sweep {
            parameter: parameter.to_string(),
            values,
        }),
        other => Err(CliError::Config(vec![format!(
            "unknown sweep parameter '{other}' (use alpha, beta, m or p)"
        )])),
    }
}

fn apply_override(
    config: &ExperimentConfig,
    parameter: &str,
    value: &str,
) -> Result<ExperimentConfig, CliError> {
    let mut updated = config.clone();
    let parse_f64 = |v: &str| {
        v.parse::<f64>()
            .map_err(|e| CliError::Config(vec![format!("sweep value '{v}': {e}")]))
    };
    let parse_usize = |v: &str| {
        v.parse::<usize>()
            .map_err(|e| CliError::Config(vec![format!("sweep value '{v}': {e}")]))
    };
    match parameter {
        "alpha" => {
            let shaping = updated.shaping.get_or_insert(ShapingConfig {
                alpha: 0.0,
                beta: Some(0.0),
                qm: None,
            });
            shaping.alpha = parse_f64(value)?;
        }
        "beta" => {
            let shaping = updated.shaping.get_or_insert(ShapingConfig {
                alpha: 0.0,
                beta: Some(0.0),
                qm: None,
            });
            shaping.beta = Some(parse_f64(value)?);
            shaping.qm = None;
        }
        "m" => {
            let m = parse_usize(value)?;
            updated.actuation = if m == updated.discretization.p {
                ActuationConfig::Full
            } else {
                ActuationConfig::Patches { m }
            };
        }
        "p" => updated.discretization.p = parse_usize(value)?,
        other => {
            return Err(CliError::Config(vec![format!(
                "unknown sweep parameter '{other}'"
            )]))
        }
    }
    updated.validate().map_err(CliError::Config)?;
    Ok(updated)
}

/// Fans a sweep out over worker threads, one fully isolated pipeline per
/// value, each writing to `<out>/<param>=<value>/`.
pub fn run_sweep(
    config: &ExperimentConfig,
    out_dir: &Path,
    stride_override: Option<usize>,
    sweep: &Sweep,
) -> Result<Vec<(String, Report)>, CliError> {
    let mut jobs: Vec<(String, ExperimentConfig, PathBuf)> = Vec::new();
    for value in &sweep.values {
        let label = format!("{}={}", sweep.parameter, value);
        let updated = apply_override(config, &sweep.parameter, value)?;
        jobs.push((label.clone(), updated, out_dir.join(label)));
    }
    let mut results: Vec<(String, Report)> = Vec::new();
    let outcomes: Vec<Result<(String, Report), CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(label, cfg, dir)| {
                scope.spawn(move || {
                    run_pipeline(cfg, dir, stride_override).map(|r| (label.clone(), r))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    for outcome in outcomes {
        results.push(outcome?);
    }
    Ok(results)
}
