use std::path::{Path, PathBuf};

use compass_core::dynamics::{simulate, FeasibilityViolation, Trajectory};
use compass_core::metrics::{
    abs_spread, absolute_value_agreement, agreement_verdict, default_monotone_tolerance, diameters,
    fit_exponential_rate, lyapunov_series, monotonicity_monitor, MonitorMode, MonitorViolation,
};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::exit;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub agreement: bool,
    pub time_to_agreement: Option<f64>,
    pub absolute_value_agreement: Vec<bool>,
    /// `None` when no validation was requested.
    pub feasible: Option<bool>,
    pub empirical_gamma: Option<f64>,
    pub monitor_clean: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationRecord {
    Feasibility(FeasibilityViolation),
    Monitor(MonitorViolation),
}

/// Metrics JSON written by `run`. Always computed at full resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub times: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    pub diameters: Vec<Vec<f64>>,
    pub abs_spread: Vec<Vec<f64>>,
    pub lambda_hat: Option<f64>,
    pub r2: Option<f64>,
    pub fit_truncated: Option<bool>,
    pub monitor_mode: MonitorMode,
    pub tol_monotone: f64,
    pub gamma: f64,
    pub verdicts: Verdicts,
    pub violations: Vec<ViolationRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory<f64>,
    pub metrics: MetricsReport,
    pub feasibility_violations: usize,
    pub monitor_violations: usize,
    pub trajectory_csv: PathBuf,
    pub metrics_json: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self, strict: bool) -> i32 {
        if !strict {
            exit::OK
        } else if self.feasibility_violations > 0 {
            exit::FEASIBILITY
        } else if self.monitor_violations > 0 {
            exit::MONITOR
        } else {
            exit::OK
        }
    }
}

pub fn compute_metrics(config: &ScenarioConfig, traj: &Trajectory<f64>, gamma: f64) -> Result<MetricsReport, CliError> {
    let v = lyapunov_series(traj);
    let fit = fit_exponential_rate(&traj.times, &v, config.monitors.tail_fraction).ok();
    let tol = config
        .monitors
        .tol_monotone
        .unwrap_or_else(|| default_monotone_tolerance(traj));
    let mode = config.monitor_mode();
    let monitor = monotonicity_monitor(traj, mode, tol);
    let eps = config.monitors.eps_agreement;
    let verdict = agreement_verdict(traj, eps)?;
    let feasibility = traj.feasibility.as_ref();
    let verdicts = Verdicts {
        agreement: verdict.agreed,
        time_to_agreement: verdict.time_to_agreement,
        absolute_value_agreement: absolute_value_agreement(traj, eps, tol).axes,
        feasible: feasibility.map(|f| f.is_feasible()),
        empirical_gamma: feasibility.and_then(|f| f.empirical_gamma),
        monitor_clean: monitor.is_empty(),
    };
    let mut violations: Vec<ViolationRecord> = feasibility
        .map(|f| f.violations.iter().cloned().map(ViolationRecord::Feasibility).collect())
        .unwrap_or_default();
    violations.extend(monitor.into_iter().map(ViolationRecord::Monitor));
    Ok(MetricsReport {
        times: traj.times.clone(),
        v,
        diameters: diameters(traj),
        abs_spread: abs_spread(traj),
        lambda_hat: fit.map(|f| f.lambda_hat),
        r2: fit.map(|f| f.r2),
        fit_truncated: fit.map(|f| f.truncated),
        monitor_mode: mode,
        tol_monotone: tol,
        gamma,
        verdicts,
        violations,
    })
}

fn resolve(out_dir: &Path, name: &str) -> PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Output(format!("{}: {e}", parent.display())))?;
    }
    Ok(())
}

/// Columns `t, agent, x_1..x_d, active_p`; agents are 1-based.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory<f64>, downsample: usize) -> Result<(), CliError> {
    ensure_parent(path)?;
    let io = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend((1..=traj.d).map(|k| format!("x_{k}")));
    header.push("active_p".into());
    w.write_record(&header).map_err(io)?;
    let last = traj.len() - 1;
    for s in (0..traj.len()).filter(|&s| s % downsample == 0 || s == last) {
        for i in 0..traj.n {
            let mut row = vec![traj.times[s].to_string(), (i + 1).to_string()];
            row.extend(traj.agent(s, i).iter().map(|v| v.to_string()));
            row.push(traj.active_index[s].to_string());
            w.write_record(&row).map_err(io)?;
        }
    }
    w.flush().map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// Simulates the scenario, computes metrics and writes both artifacts under `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let spec = config.protocol_spec()?;
    let signal = &config.signal;
    log::info!(
        "simulating n={} d={} to t={} with h={}",
        config.agents.n,
        config.agents.d,
        config.integrator.t_end,
        config.integrator.h
    );
    let traj = simulate(&spec, signal, &config.simulation_config())?;
    log::debug!("{} samples", traj.len());
    let metrics = compute_metrics(config, &traj, spec.gamma())?;
    let feasibility_violations = traj.feasibility.as_ref().map_or(0, |f| f.violations.len());
    let monitor_violations = metrics
        .violations
        .iter()
        .filter(|v| matches!(v, ViolationRecord::Monitor(_)))
        .count();
    if feasibility_violations > 0 {
        log::warn!("{feasibility_violations} feasibility violations");
    }
    if monitor_violations > 0 {
        log::warn!("{monitor_violations} monitor violations");
    }
    let trajectory_csv = resolve(out_dir, &config.outputs.trajectory_csv);
    let metrics_json = resolve(out_dir, &config.outputs.metrics_json);
    write_trajectory_csv(&trajectory_csv, &traj, config.outputs.downsample)?;
    write_json(&metrics_json, &metrics)?;
    Ok(RunOutcome {
        trajectory: traj,
        metrics,
        feasibility_violations,
        monitor_violations,
        trajectory_csv,
        metrics_json,
    })
}
