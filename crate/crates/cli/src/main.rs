//! `risma`: run one scenario, sweep a parameter, or run an oracle suite.
//!
//! Exit codes: 0 on success, 1 on invalid input or I/O failure, 2 when an
//! oracle check fails.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use risma::harness::checks::{run_check, CheckSuite};
use risma::harness::sweep::{run_sweep, write_sweep_csv, SweepParam, SweepSpec, Variant};
use risma::harness::{parse_config, run_once};

#[derive(Parser)]
#[command(name = "risma", version, about = "Sum-rate optimization for RIS-aided movable-antenna downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write its convergence trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Scenario seed; overrides the config file's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Fill the `cum_ms` column with wall-clock times.
        #[arg(long)]
        timing: bool,
    },
    /// Monte-Carlo sweep of one parameter over several variants.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// pmax_dbm, region_lambda or iterations.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Comma-separated variants such as ma-cps,fpa-cps,ma-dps4.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        variants: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Master seed; overrides the config file's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run an oracle suite: gradients, mm, bisect, tightness or brute_dps.
    Check {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Input(String),
    Oracle,
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    let input = |e: &dyn std::fmt::Display| Failure::Input(e.to_string());
    match command {
        Command::Run { config, seed, out, timing } => {
            let config = parse_config(&config).map_err(|e| input(&e))?;
            let seed = seed.unwrap_or(config.seed);
            let mut file = create(&out)?;
            run_once(&config, seed, timing, &mut file).map_err(|e| input(&e))?;
            file.flush().map_err(|e| input(&e))?;
        }
        Command::Sweep { config, param, values, trials, variants, out, seed, workers } => {
            let mut base = parse_config(&config).map_err(|e| input(&e))?;
            if let Some(seed) = seed {
                base.seed = seed;
            }
            let param: SweepParam = param.parse().map_err(|e| input(&e))?;
            let variants = variants
                .iter()
                .map(|v| v.parse::<Variant>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| input(&e))?;
            let spec = SweepSpec { base, param, values, variants, trials, workers };
            let result = run_sweep(&spec).map_err(|e| input(&e))?;
            let mut file = create(&out)?;
            write_sweep_csv(&result, &mut file).map_err(|e| input(&e))?;
            file.flush().map_err(|e| input(&e))?;
            if result.failures() > 0 {
                eprintln!("{} solves failed and were excluded", result.failures());
            }
        }
        Command::Check { suite, seed } => {
            let suite: CheckSuite = suite.parse().map_err(|e| input(&e))?;
            let report = run_check(suite, seed).map_err(|e| input(&e))?;
            print!("{report}");
            if !report.passed() {
                return Err(Failure::Oracle);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Oracle) => ExitCode::from(2),
    }
}
