//! Monte-Carlo sweeps over transmit power, region size or iteration count.
//!
//! Trial `t` draws the same scenario for every variant and every swept value,
//! so comparisons between curves are paired.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::format_number;
use crate::error::{Error, Result};
use crate::model::{sample_scenario, AntennaMode, RisMode, SystemConfig};
use crate::solver::solve;

pub const SWEEP_HEADER: &str = "variant,param,value,mean_rate,stderr,trials";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    PmaxDbm,
    RegionLambda,
    Iterations,
}

impl SweepParam {
    /// Copy of `base` with this parameter set to `value`.
    ///
    /// An iteration sweep runs exactly `value` outer iterations: the
    /// convergence test is disabled so every point shares one schedule.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let config = match self {
            SweepParam::PmaxDbm => base.clone().with_pmax_dbm(value),
            SweepParam::RegionLambda => SystemConfig { region_lambda: value, ..base.clone() },
            SweepParam::Iterations => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::config("iterations", format!("{value} is not a whole number")));
                }
                SystemConfig { r_max: value as usize, tol: f64::MIN_POSITIVE, ..base.clone() }
            }
        };
        config.validate()?;
        Ok(config)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::PmaxDbm => "pmax_dbm",
            SweepParam::RegionLambda => "region_lambda",
            SweepParam::Iterations => "iterations",
        })
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pmax_dbm" => Ok(SweepParam::PmaxDbm),
            "region_lambda" => Ok(SweepParam::RegionLambda),
            "iterations" => Ok(SweepParam::Iterations),
            other => Err(Error::config("param", format!("unknown sweep parameter `{other}`"))),
        }
    }
}

/// An antenna mode paired with a RIS mode, written `ma-cps`, `fpa-dps4`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub antenna: AntennaMode,
    pub ris: RisMode,
}

impl Variant {
    pub fn apply(self, base: &SystemConfig) -> SystemConfig {
        SystemConfig { antenna_mode: self.antenna, ris_mode: self.ris, ..base.clone() }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.antenna, self.ris)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (antenna, ris) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::config("variants", format!("`{s}` is not of the form <ma|fpa>-<ris mode>")))?;
        Ok(Variant { antenna: antenna.parse()?, ris: ris.parse()? })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub variants: Vec<Variant>,
    pub trials: usize,
    /// Thread count; 0 lets rayon decide.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: Variant,
    pub value: f64,
    pub mean_rate: f64,
    pub stderr: f64,
    /// Trials that finished; failed ones are excluded from the mean.
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    /// Final rate of every trial, `[variant][value][trial]`; `None` on failure.
    pub samples: Vec<Vec<Vec<Option<f64>>>>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Scenario seed of trial `trial` under master seed `master`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(master) ^ trial as u64)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    if spec.values.is_empty() {
        return Err(Error::config("values", "need at least one value"));
    }
    if spec.variants.is_empty() {
        return Err(Error::config("variants", "need at least one variant"));
    }
    let mut configs = Vec::new();
    for variant in &spec.variants {
        let mut row = Vec::new();
        for &value in &spec.values {
            row.push(spec.param.apply(&variant.apply(&spec.base), value)?);
        }
        configs.push(row);
    }

    let jobs: Vec<(usize, usize, usize)> = (0..spec.variants.len())
        .flat_map(|a| (0..spec.values.len()).flat_map(move |b| (0..spec.trials).map(move |t| (a, b, t))))
        .collect();
    let run = |&(a, b, t): &(usize, usize, usize)| -> Option<f64> {
        let config = &configs[a][b];
        let scenario = sample_scenario(config, trial_seed(spec.base.seed, t)).ok()?;
        match solve(&scenario, config) {
            Ok((_, trace)) => Some(trace.final_rate()),
            Err(failure) => {
                eprintln!(
                    "warning: {} {}={} trial {t}: {failure}",
                    spec.variants[a], spec.param, spec.values[b]
                );
                None
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let flat: Vec<Option<f64>> = pool.install(|| jobs.par_iter().map(run).collect());

    let mut samples = Vec::new();
    let mut rows = Vec::new();
    let mut chunks = flat.chunks(spec.trials);
    for &variant in &spec.variants {
        let mut per_value = Vec::new();
        for &value in &spec.values {
            let chunk = chunks.next().expect("one chunk per job group").to_vec();
            let ok: Vec<f64> = chunk.iter().flatten().copied().collect();
            let (mean_rate, stderr) = mean_and_stderr(&ok);
            rows.push(SweepRow {
                variant,
                value,
                mean_rate,
                stderr,
                trials: ok.len(),
                failures: chunk.len() - ok.len(),
            });
            per_value.push(chunk);
        }
        samples.push(per_value);
    }
    Ok(SweepResult { param: spec.param, rows, samples })
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.variant,
            result.param,
            format_number(r.value),
            format_number(r.mean_rate),
            format_number(r.stderr),
            r.trials
        )?;
    }
    Ok(())
}
