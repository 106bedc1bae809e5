//! Subcommand definitions and their handlers. Every handler returns the process exit code.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use compass_core::graph::{
    check_uniform_joint_connectivity, validate_switching_signal, ConnectivityMode, VerdictScope,
};
use compass_core::metrics::{rate_bound, t_bar_from};
use rayon::prelude::*;

use crate::config::{load_graphs, load_scenario};
use crate::error::CliError;
use crate::exit;
use crate::run::{run_scenario, RunOutcome, ViolationRecord};

#[derive(Debug, Parser)]
#[command(name = "compass", version, about = "Simulate and analyze compass-based agreement protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write the trajectory CSV and metrics JSON.
    Run(RunArgs),
    /// Check uniform joint connectivity of a graph family under a switching signal.
    CheckGraphs(CheckGraphsArgs),
    /// Evaluate the explicit contraction factor and rate bound.
    RateBound(RateBoundArgs),
    /// Print a scenario with every default filled in.
    DumpConfig(DumpConfigArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Scenario file(s). More than one requires --batch.
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// Run the scenarios in parallel, each writing into `<out-dir>/<file stem>/`.
    #[arg(long)]
    pub batch: bool,
    /// Override the sampling seed of randomly initialized scenarios.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Exit 3 on feasibility violations and 4 on monitor violations.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    QuasiStrong,
    Strong,
}

impl From<ModeArg> for ConnectivityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::QuasiStrong => ConnectivityMode::QuasiStrong,
            ModeArg::Strong => ConnectivityMode::Strong,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct CheckGraphsArgs {
    /// JSON file with `graphs` and `signal` (a scenario file works too).
    pub path: PathBuf,
    /// Window length T.
    #[arg(long, visible_alias = "T")]
    pub window: f64,
    #[arg(long, value_enum, default_value = "quasi-strong")]
    pub mode: ModeArg,
    /// Print the full report as JSON instead of one line per window.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, clap::Args)]
#[command(allow_negative_numbers = true)]
pub struct RateBoundArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Joint-connectivity window length.
    #[arg(long = "T")]
    pub window: f64,
    #[arg(long)]
    pub tau_d: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub l_star: f64,
    #[arg(long)]
    pub l_plus: f64,
}

#[derive(Debug, clap::Args)]
pub struct DumpConfigArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn dispatch(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(a) => run_cmd(&a),
        Command::CheckGraphs(a) => check_graphs_cmd(&a),
        Command::RateBound(a) => rate_bound_cmd(&a),
        Command::DumpConfig(a) => dump_config_cmd(&a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

fn run_one(path: &Path, seed: Option<u64>, out_dir: &Path, strict: bool) -> Result<i32, CliError> {
    let mut config = load_scenario(path)?;
    if let Some(s) = seed {
        config = config.with_seed(s);
    }
    let outcome = run_scenario(&config, out_dir)?;
    report(path, &outcome, strict);
    Ok(outcome.exit_code(strict))
}

fn report(path: &Path, o: &RunOutcome, strict: bool) {
    let m = &o.metrics;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
    println!("{}", path.display());
    println!("  V(t_end)           {:.6e}", m.v.last().copied().unwrap_or(f64::NAN));
    println!("  lambda_hat         {}  (r2 {})", fmt(m.lambda_hat), fmt(m.r2));
    println!(
        "  agreement          {}  (t = {})",
        m.verdicts.agreement,
        fmt(m.verdicts.time_to_agreement)
    );
    println!("  |x| agreement      {:?}", m.verdicts.absolute_value_agreement);
    match m.verdicts.feasible {
        Some(f) => println!(
            "  feasible           {f}  ({} violations, empirical gamma {})",
            o.feasibility_violations,
            fmt(m.verdicts.empirical_gamma)
        ),
        None => println!("  feasible           not checked"),
    }
    println!("  monitor clean      {}  ({} violations)", m.verdicts.monitor_clean, o.monitor_violations);
    println!("  wrote {} and {}", o.trajectory_csv.display(), o.metrics_json.display());
    if strict {
        for v in m.violations.iter().take(5) {
            match v {
                ViolationRecord::Feasibility(f) => eprintln!(
                    "violation: feasibility at t = {} agent {} ({:?})",
                    f.time,
                    f.agent + 1,
                    f.reason
                ),
                ViolationRecord::Monitor(mv) => eprintln!(
                    "violation: monitor at t = {} axis {} {:?} exceeds by {:e}",
                    mv.time,
                    mv.axis + 1,
                    mv.quantity,
                    mv.excess
                ),
            }
        }
    }
}

pub fn run_cmd(a: &RunArgs) -> Result<i32, CliError> {
    if !a.batch {
        if a.configs.len() != 1 {
            return Err(CliError::Config("several scenario files need --batch".into()));
        }
        return run_one(&a.configs[0], a.seed, &a.out_dir, a.strict);
    }
    let stems: Vec<String> = a
        .configs
        .iter()
        .map(|p| p.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned()))
        .collect();
    let mut sorted = stems.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config("batch scenario files must have distinct file stems".into()));
    }
    let codes: Vec<i32> = a
        .configs
        .par_iter()
        .zip(stems.par_iter())
        .map(|(path, stem)| {
            run_one(path, a.seed, &a.out_dir.join(stem), a.strict).unwrap_or_else(|e| {
                eprintln!("error: {}: {e}", path.display());
                e.exit_code()
            })
        })
        .collect();
    Ok(codes.into_iter().max().unwrap_or(exit::OK))
}

pub fn check_graphs_cmd(a: &CheckGraphsArgs) -> Result<i32, CliError> {
    let file = load_graphs(&a.path)?;
    let problems = validate_switching_signal(&file.signal);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(|p| format!("{p:?}")).collect();
        return Err(CliError::Config(format!("invalid switching signal: {}", list.join("; "))));
    }
    let report = check_uniform_joint_connectivity(&file.signal, &file.graphs, a.window, a.mode.into())?;
    if a.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?
        );
    } else {
        for w in &report.windows {
            let tag = if w.connected { "connected" } else { "NOT connected" };
            println!("[{}, {})  {tag}", w.start, w.end);
        }
        let scope = match report.scope {
            VerdictScope::Global => "all t >= t0",
            VerdictScope::Horizon => "windows inside the horizon",
        };
        let mode = match report.mode {
            ConnectivityMode::QuasiStrong => "quasi-strongly",
            ConnectivityMode::Strong => "strongly",
        };
        if report.connected {
            println!("uniformly jointly {mode} connected with T = {} ({scope})", report.window);
        } else {
            println!("NOT uniformly jointly {mode} connected with T = {} ({scope})", report.window);
        }
        if let Some(w) = &report.witness {
            println!("witness window: [{}, {})", w.start, w.end);
        }
    }
    Ok(if report.connected { exit::OK } else { exit::NOT_CONNECTED })
}

pub fn rate_bound_cmd(a: &RateBoundArgs) -> Result<i32, CliError> {
    for (name, v) in [
        ("--T", a.window),
        ("--tau-d", a.tau_d),
        ("--gamma", a.gamma),
        ("--l-star", a.l_star),
        ("--l-plus", a.l_plus),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Config(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if a.d == 0 {
        return Err(CliError::Config("--d must be at least 1".into()));
    }
    let t_bar = t_bar_from(a.n, a.window, a.tau_d)?;
    let b = rate_bound(a.n, a.d, t_bar, a.gamma, a.tau_d, a.l_star, a.l_plus)?;
    println!("T1        {}", a.window + 2.0 * a.tau_d);
    println!("T_bar     {t_bar}");
    println!("beta      {}", b.beta);
    println!("beta_star {}", b.beta_star);
    Ok(exit::OK)
}

pub fn dump_config_cmd(a: &DumpConfigArgs) -> Result<i32, CliError> {
    let mut config = load_scenario(&a.path)?;
    if let Some(s) = a.seed {
        config = config.with_seed(s);
    }
    let text = serde_json::to_string_pretty(&config).map_err(|e| CliError::Output(e.to_string()))?;
    println!("{text}");
    Ok(exit::OK)
}
