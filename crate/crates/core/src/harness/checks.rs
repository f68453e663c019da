//! Built-in oracle suites behind `risma check <suite>`.
//!
//! Every suite draws seeded random instances, compares the library against
//! an independent evaluation and reports the worst residual together with
//! the seeds of any failing instance.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::sweep::trial_seed;
use crate::beamform::{auxiliaries, lagrangian_objective, solve_power_dual};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::model::{
    channels_from_paths, field_response_matrix, reflected_paths, sinrs, sum_rate_from_sinrs, AntennaPositions,
    RisMode, RisPhases, Scenario, SystemConfig, sample_scenario,
};
use crate::positions::{position_auxiliaries, position_gradient, position_objective, update_delta, Region};
use crate::ris::{
    assemble_quadratic, fractional_objective, mm_step, optimize_phases, transformed_objective, update_epsilon,
    QuadraticForm, ReflectionTerms,
};
use crate::solver::initial_layout;

pub const INSTANCES: usize = 100;
pub const MM_STEPS: usize = 50;
pub const BRUTE_INSTANCES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckSuite {
    Gradients,
    Mm,
    Bisect,
    Tightness,
    BruteDps,
}

impl CheckSuite {
    pub const ALL: [CheckSuite; 5] =
        [CheckSuite::Gradients, CheckSuite::Mm, CheckSuite::Bisect, CheckSuite::Tightness, CheckSuite::BruteDps];
}

impl fmt::Display for CheckSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckSuite::Gradients => "gradients",
            CheckSuite::Mm => "mm",
            CheckSuite::Bisect => "bisect",
            CheckSuite::Tightness => "tightness",
            CheckSuite::BruteDps => "brute_dps",
        })
    }
}

impl FromStr for CheckSuite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckSuite::ALL
            .into_iter()
            .find(|c| c.to_string() == s.trim())
            .ok_or_else(|| Error::config("suite", format!("unknown check suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub suite: CheckSuite,
    pub instances: usize,
    /// Largest residual seen, in the suite's own metric.
    pub worst: f64,
    pub threshold: f64,
    /// Seeds of instances that violated the oracle.
    pub failing_seeds: Vec<u64>,
    /// Extra human-readable lines.
    pub notes: Vec<String>,
    passed: bool,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.passed
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} {}: {} instances, worst residual {:.3e} (threshold {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.instances,
            self.worst,
            self.threshold
        )?;
        for note in &self.notes {
            writeln!(f, "  {note}")?;
        }
        if !self.failing_seeds.is_empty() {
            let shown: Vec<String> = self.failing_seeds.iter().take(10).map(|s| s.to_string()).collect();
            writeln!(f, "  failing instance seeds: {}", shown.join(", "))?;
        }
        Ok(())
    }
}

/// A scenario together with a random feasible operating point.
#[derive(Debug, Clone)]
pub struct Instance {
    pub config: SystemConfig,
    pub scenario: Scenario,
    pub phases: RisPhases,
    pub positions: AntennaPositions,
    pub w: CMatrix,
}

impl Instance {
    pub fn field_response(&self) -> CMatrix {
        field_response_matrix(&self.positions, &self.scenario.path_directions, self.scenario.wavelength)
    }

    pub fn channels(&self) -> Vec<CVector> {
        channels_from_paths(&self.field_response(), &reflected_paths(&self.scenario, &self.phases))
    }

    pub fn sinrs(&self) -> Vec<f64> {
        sinrs(&self.channels(), &self.w, self.config.noise_w)
    }
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

fn random_layout(config: &SystemConfig, rng: &mut ChaCha8Rng) -> Result<AntennaPositions> {
    let region = Region::from_config(config);
    let mut points: Vec<[f64; 2]> = Vec::new();
    for _ in 0..1000 {
        points.clear();
        for _ in 0..config.n_antennas {
            let p = (0..1000).map(|_| [rng.random_range(0.0..=region.side), rng.random_range(0.0..=region.side)]).find(|p| {
                points.iter().all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) >= region.min_distance)
            });
            match p {
                Some(p) => points.push(p),
                None => break,
            }
        }
        if points.len() == config.n_antennas {
            return Ok(AntennaPositions::new(points));
        }
    }
    initial_layout(config)
}

/// Scenario `seed` with random unit-modulus phases, a random feasible layout
/// and a random beamformer at full power.
pub fn random_instance(config: &SystemConfig, seed: u64) -> Result<Instance> {
    let scenario = sample_scenario(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut phases = RisPhases::random(config.n_ris, &mut rng);
    if let RisMode::Dps(levels) = config.ris_mode {
        phases = RisPhases::new(crate::ris::quantize_phases(phases.vector(), levels));
    }
    let positions = random_layout(config, &mut rng)?;
    let mut w = CMatrix::from_fn(config.n_antennas, config.n_users, |_, _| complex_normal(&mut rng));
    w *= C64::new((config.pmax_w / w.norm_squared()).sqrt(), 0.0);
    Ok(Instance { config: config.clone(), scenario, phases, positions, w })
}

/// Position-block auxiliaries at the instance's operating point.
fn position_setup(inst: &Instance) -> crate::positions::PositionAuxiliaries {
    let alpha = inst.sinrs();
    let terms = ReflectionTerms::new(&inst.scenario, &inst.field_response(), &inst.w);
    let delta = update_delta(&terms, inst.phases.vector(), &alpha, inst.config.noise_w);
    position_auxiliaries(&inst.scenario, &inst.phases, &inst.w, &delta, &alpha)
}

/// Largest relative error between the analytic position gradient and
/// central differences with step `1e-6 λ`, over all antennas.
pub fn gradient_error(inst: &Instance) -> f64 {
    let aux = position_setup(inst);
    let h = 1e-6 * inst.scenario.wavelength;
    let mut worst: f64 = 0.0;
    for n in 0..inst.positions.len() {
        let g = position_gradient(&inst.positions, n, &aux, &inst.scenario);
        let mut fd = [0.0; 2];
        for (d, slot) in fd.iter_mut().enumerate() {
            let mut plus = inst.positions.clone();
            let mut minus = inst.positions.clone();
            let p = inst.positions.get(n);
            let mut pp = p;
            let mut pm = p;
            pp[d] += h;
            pm[d] -= h;
            plus.set(n, pp);
            minus.set(n, pm);
            *slot = (position_objective(&plus, &aux, &inst.scenario) - position_objective(&minus, &aux, &inst.scenario))
                / (2.0 * h);
        }
        let err = (g[0] - fd[0]).hypot(g[1] - fd[1]);
        let scale = fd[0].hypot(fd[1]).max(f64::MIN_POSITIVE);
        worst = worst.max(err / scale);
    }
    worst
}

/// The φ-block quadratic form at the instance's operating point.
pub fn phase_quadratic(inst: &Instance) -> QuadraticForm {
    let alpha = inst.sinrs();
    let terms = ReflectionTerms::new(&inst.scenario, &inst.field_response(), &inst.w);
    let eps = update_epsilon(&terms, inst.phases.vector(), &alpha, inst.config.noise_w);
    assemble_quadratic(&terms, &eps, &alpha)
}

/// Largest scaled decrease of `f₂` over `steps` MM updates from the
/// instance's phases; positive means a violation.
pub fn mm_worst_decrease(q: &QuadraticForm, start: &CVector, steps: usize) -> f64 {
    let mut phi = start.clone();
    let mut f = q.value(&phi);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..steps {
        let next = mm_step(q, &phi);
        let fn_ = q.value(&next);
        worst = worst.max((f - fn_) / f.abs().max(1.0));
        phi = next;
        f = fn_;
    }
    worst
}

/// Best `f₂` over all `κ^M` quantized phase vectors.
pub fn exhaustive_dps(q: &QuadraticForm, levels: u32) -> (f64, CVector) {
    let m = q.dim();
    let total = (levels as u64).pow(m as u32);
    let step = std::f64::consts::TAU / levels as f64;
    let mut best = (f64::NEG_INFINITY, CVector::zeros(m));
    let mut phi = CVector::zeros(m);
    for code in 0..total {
        let mut c = code;
        for z in phi.iter_mut() {
            *z = C64::from_polar(1.0, (c % levels as u64) as f64 * step);
            c /= levels as u64;
        }
        let f = q.value(&phi);
        if f > best.0 {
            best = (f, phi.clone());
        }
    }
    best
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn run_check(suite: CheckSuite, master_seed: u64) -> Result<CheckReport> {
    let base = SystemConfig::default();
    let seeds = |count: usize| (0..count).map(move |i| trial_seed(master_seed, i));
    let mut failing = Vec::new();
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let (instances, threshold, extra_ok) = match suite {
        CheckSuite::Gradients => {
            let threshold = 1e-5;
            for seed in seeds(INSTANCES) {
                let err = gradient_error(&random_instance(&base, seed)?);
                worst = worst.max(err);
                if !(err < threshold) {
                    failing.push(seed);
                }
            }
            (INSTANCES, threshold, true)
        }
        CheckSuite::Mm => {
            let threshold = 1e-10;
            for seed in seeds(INSTANCES) {
                let inst = random_instance(&base, seed)?;
                let dec = mm_worst_decrease(&phase_quadratic(&inst), inst.phases.vector(), MM_STEPS);
                worst = worst.max(dec);
                if !(dec <= threshold) {
                    failing.push(seed);
                }
            }
            notes.push(format!("{MM_STEPS} MM steps per instance; residual is the largest scaled f2 decrease"));
            (INSTANCES, threshold, true)
        }
        CheckSuite::Bisect => {
            let threshold = 1e-8;
            let mut binding = 0;
            for seed in seeds(INSTANCES) {
                let inst = random_instance(&base, seed)?;
                let channels = inst.channels();
                let aux = auxiliaries(&channels, &inst.w, base.noise_w);
                let (dual, w) = solve_power_dual(&channels, &aux.alpha, &aux.beta, base.pmax_w, base.bisection_tol)?;
                let power = w.norm_squared();
                let residual = if dual > 0.0 {
                    binding += 1;
                    (power - base.pmax_w).abs() / base.pmax_w
                } else {
                    ((power - base.pmax_w) / base.pmax_w).max(0.0)
                };
                worst = worst.max(residual);
                if !(residual <= threshold) {
                    failing.push(seed);
                }
            }
            notes.push(format!("budget binding on {binding} of {INSTANCES} instances"));
            (INSTANCES, threshold, true)
        }
        CheckSuite::Tightness => {
            let threshold = 1e-9;
            for seed in seeds(INSTANCES) {
                let inst = random_instance(&base, seed)?;
                let noise = base.noise_w;
                let gamma = inst.sinrs();
                let rate_nats = sum_rate_from_sinrs(&gamma) * std::f64::consts::LN_2;
                let channels = inst.channels();
                let aux = auxiliaries(&channels, &inst.w, noise);
                let outer: f64 = gamma.iter().map(|g| (1.0 + g).ln() - g).sum();

                let w_block = lagrangian_objective(&channels, &inst.w, &aux.alpha, &aux.beta, noise);
                let terms = ReflectionTerms::new(&inst.scenario, &inst.field_response(), &inst.w);
                let phi = inst.phases.vector();
                let eps = update_epsilon(&terms, phi, &gamma, noise);
                let ratio = fractional_objective(&terms, phi, &gamma, noise);
                let phi_block = outer + transformed_objective(&terms, phi, &eps, &gamma, noise);
                let paux = position_setup(&inst);
                let spread: f64 = paux.delta.iter().map(|d| d.norm_sqr() * noise).sum();
                let t_block = outer + position_objective(&inst.positions, &paux, &inst.scenario) - spread;

                let residual = [w_block, outer + ratio, phi_block, t_block]
                    .iter()
                    .map(|&v| relative(v, rate_nats))
                    .fold(0.0, f64::max);
                worst = worst.max(residual);
                if !(residual <= threshold) {
                    failing.push(seed);
                }
            }
            (INSTANCES, threshold, true)
        }
        CheckSuite::BruteDps => {
            let config = SystemConfig {
                n_antennas: 2,
                n_users: 2,
                n_ris: 8,
                n_paths: 2,
                ris_mode: RisMode::Dps(2),
                ..base.clone()
            };
            let threshold = 1e-9;
            let mut matches = 0;
            for seed in seeds(BRUTE_INSTANCES) {
                let inst = random_instance(&config, seed)?;
                let q = phase_quadratic(&inst);
                let got = optimize_phases(&q, &inst.phases, config.ris_mode, config.tau_max, config.mm_tol, config.ellipsoid_tol)?;
                let f = q.value(got.vector());
                let (opt, _) = exhaustive_dps(&q, 2);
                let tol = threshold * opt.abs().max(1.0);
                let gap = (opt - f) / opt.abs().max(1.0);
                if f > opt + tol {
                    failing.push(seed);
                }
                if f >= opt - tol {
                    matches += 1;
                }
                worst = worst.max(gap.abs());
            }
            let rate = matches as f64 / BRUTE_INSTANCES as f64;
            notes.push(format!(
                "heuristic matched the exhaustive optimum on {matches} of {BRUTE_INSTANCES} instances ({:.0}%, need 70%)",
                rate * 100.0
            ));
            notes.push("residual is the largest relative gap to the optimum".into());
            (BRUTE_INSTANCES, threshold, rate >= 0.7)
        }
    };
    Ok(CheckReport {
        suite,
        instances,
        worst,
        threshold,
        passed: failing.is_empty() && extra_ok,
        failing_seeds: failing,
        notes,
    })
}
