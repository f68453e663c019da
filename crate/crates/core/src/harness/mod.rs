//! Everything the command-line tool needs: configuration files, single
//! runs, Monte-Carlo sweeps, CSV output and the built-in oracle checks.

pub mod checks;
mod config_file;
mod csv;
pub mod sweep;

use std::io::Write;

pub use config_file::{config_to_toml, parse_config, parse_config_str};
pub use csv::format_number;

use crate::model::{sample_scenario, SystemConfig};
use crate::solver::{solve, SolveFailure, SolverTrace};
use crate::Error;

pub const RUN_HEADER: &str = "iter,sum_rate_bps_hz,cum_ms";

/// Solves one scenario drawn with `seed` and writes its convergence trace as
/// `iter,sum_rate_bps_hz,cum_ms`. Wall-clock times vary between runs, so the
/// `cum_ms` column is left empty unless `timing` is set; without it the
/// output is byte-identical for identical inputs.
pub fn run_once<W: Write>(config: &SystemConfig, seed: u64, timing: bool, out: &mut W) -> Result<SolverTrace, RunError> {
    let scenario = sample_scenario(config, seed)?;
    let (_, trace) = solve(&scenario, config)?;
    write_trace(&trace, timing, out)?;
    Ok(trace)
}

pub fn write_trace<W: Write>(trace: &SolverTrace, timing: bool, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{RUN_HEADER}")?;
    for r in &trace.records {
        let ms = if timing { format_number(r.cum_ms) } else { String::new() };
        writeln!(out, "{},{},{}", r.iteration, format_number(r.sum_rate), ms)?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Setup(#[from] Error),
    #[error(transparent)]
    Solve(#[from] SolveFailure),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
