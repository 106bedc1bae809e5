#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Library side of the `compass` command-line tool: scenario files, the run pipeline and the
//! analysis subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;

pub use config::{load_scenario, parse_scenario, ScenarioConfig};
pub use error::CliError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// `check-graphs`: the joint-connectivity requirement fails.
    pub const NOT_CONNECTED: i32 = 1;
    /// Unreadable or invalid input, bad flags, insufficient horizon.
    pub const CONFIG: i32 = 2;
    /// `run --strict`: the cone condition failed at some sample.
    pub const FEASIBILITY: i32 = 3;
    /// `run --strict`: a monotonicity monitor fired.
    pub const MONITOR: i32 = 4;
    pub const DIVERGENCE: i32 = 5;
}
