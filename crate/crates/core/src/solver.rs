//! Outer fractional-programming loop: `(α, β) → W → ε → φ → δ → T`,
//! repeated until the sum-rate settles.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beamform;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::model::{
    channels_from_paths, field_response_matrix, reflected_paths, sinrs, sum_rate, sum_rate_from_sinrs, AntennaMode,
    AntennaPositions, RisMode, RisPhases, Scenario, SystemConfig,
};
use crate::positions::{optimize_positions, position_auxiliaries, update_delta, Region, StepSettings};
use crate::ris::{assemble_quadratic, optimize_phases, quantize_phases, update_epsilon, ReflectionTerms};

/// Current iterates and the auxiliaries from the last outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub w: CMatrix,
    pub phases: RisPhases,
    pub positions: AntennaPositions,
    pub alpha: Vec<f64>,
    pub beta: Vec<C64>,
    pub epsilon: Vec<C64>,
    pub delta: Vec<C64>,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlockTimings {
    pub beamform_ms: f64,
    pub ris_ms: f64,
    pub positions_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// One-based outer iteration index.
    pub iteration: usize,
    /// Sum-rate after this iteration, bits/s/Hz.
    pub sum_rate: f64,
    /// Wall time since the solve started.
    pub cum_ms: f64,
    pub blocks: BlockTimings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    /// Sum-rate of the initial point.
    pub initial_rate: f64,
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
}

impl SolverTrace {
    pub fn final_rate(&self) -> f64 {
        self.records.last().map_or(self.initial_rate, |r| r.sum_rate)
    }

    pub fn rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sum_rate).collect()
    }
}

/// A block failed. `state` is the last state that completed a full
/// iteration and `trace` covers everything up to it.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: Error,
    pub state: Box<SolverState>,
    pub trace: SolverTrace,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solve failed after {} iterations: {}", self.trace.records.len(), self.error)
    }
}

impl std::error::Error for SolveFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Starting antenna layout.
///
/// Fixed antennas always form a λ/2 ULA. Movable antennas start from the same
/// ULA when it fits in the region; otherwise the array wraps onto further
/// rows of the same lattice. The lattice pitch is `max(λ/2, D)`.
pub fn initial_layout(config: &SystemConfig) -> Result<AntennaPositions> {
    let lambda = config.wavelength();
    if config.antenna_mode == AntennaMode::Fixed {
        return Ok(AntennaPositions::ula(config.n_antennas, lambda / 2.0));
    }
    let pitch_lambda = config.min_dist_lambda.max(0.5);
    let pitch = pitch_lambda * lambda;
    let per_row = ((config.region_lambda / pitch_lambda) * (1.0 + 1e-12)).floor() as usize + 1;
    let layout = AntennaPositions::new(
        (0..config.n_antennas)
            .map(|i| [(i % per_row) as f64 * pitch, (i / per_row) as f64 * pitch])
            .collect(),
    );
    // Rounding can push the last lattice point past the edge by an ulp.
    let side = config.region_side();
    let layout = AntennaPositions::new(
        layout.points().iter().map(|p| [p[0].min(side), p[1].min(side)]).collect(),
    );
    if !Region::from_config(config).feasible(&layout) {
        return Err(Error::config(
            "n_antennas",
            format!(
                "{} antennas at spacing {pitch_lambda}λ do not fit in a {}λ region",
                config.n_antennas, config.region_lambda
            ),
        ));
    }
    Ok(layout)
}

/// Matched-filter beams `H_k/‖H_k‖`, uniformly scaled to the full budget.
fn matched_filter(channels: &[CVector], n: usize, pmax: f64) -> CMatrix {
    let k = channels.len();
    let scale = (pmax / k as f64).sqrt();
    let mut w = CMatrix::zeros(n, k);
    for (i, h) in channels.iter().enumerate() {
        let norm = h.norm();
        let col = if norm > 0.0 {
            h / C64::new(norm, 0.0)
        } else {
            let mut e = CVector::zeros(n);
            e[i % n] = C64::new(1.0, 0.0);
            e
        };
        w.set_column(i, &(col * C64::new(scale, 0.0)));
    }
    w
}

/// Builds the starting point: lattice antennas, random unit-modulus RIS
/// phases seeded from the scenario (quantized for DPS), matched-filter beams.
pub fn initialize(scenario: &Scenario, config: &SystemConfig) -> Result<SolverState> {
    config.validate()?;
    let positions = initial_layout(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(1);
    let mut phases = RisPhases::random(scenario.n_ris(), &mut rng);
    if let RisMode::Dps(levels) = config.ris_mode {
        phases = RisPhases::new(quantize_phases(phases.vector(), levels));
    }
    let gt = field_response_matrix(&positions, &scenario.path_directions, scenario.wavelength);
    let channels = channels_from_paths(&gt, &reflected_paths(scenario, &phases));
    let w = matched_filter(&channels, config.n_antennas, config.pmax_w);
    let k = config.n_users;
    Ok(SolverState {
        w,
        phases,
        positions,
        alpha: vec![0.0; k],
        beta: vec![C64::new(0.0, 0.0); k],
        epsilon: vec![C64::new(0.0, 0.0); k],
        delta: vec![C64::new(0.0, 0.0); k],
        iteration: 0,
    })
}

pub fn state_rate(scenario: &Scenario, config: &SystemConfig, state: &SolverState) -> f64 {
    sum_rate(&state.w, &state.phases, &state.positions, scenario, config.noise_w)
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// One outer iteration, in place. `α` and `β` are refreshed once at the top
/// and reused by the φ and T blocks.
pub fn iterate(scenario: &Scenario, config: &SystemConfig, state: &mut SolverState) -> Result<BlockTimings> {
    let noise = config.noise_w;
    let mut timings = BlockTimings::default();

    let clock = Instant::now();
    let gt = field_response_matrix(&state.positions, &scenario.path_directions, scenario.wavelength);
    let channels = channels_from_paths(&gt, &reflected_paths(scenario, &state.phases));
    let aux = beamform::auxiliaries(&channels, &state.w, noise);
    let (_, w) = beamform::solve_power_dual(&channels, &aux.alpha, &aux.beta, config.pmax_w, config.bisection_tol)?;
    state.alpha = aux.alpha;
    state.beta = aux.beta;
    state.w = w;
    timings.beamform_ms = elapsed_ms(clock);

    let needs_terms = config.ris_mode != RisMode::Fixed || config.antenna_mode == AntennaMode::Movable;
    let terms = needs_terms.then(|| ReflectionTerms::new(scenario, &gt, &state.w));

    if let (RisMode::Irc | RisMode::Cps | RisMode::Dps(_), Some(terms)) = (config.ris_mode, &terms) {
        let clock = Instant::now();
        state.epsilon = update_epsilon(terms, state.phases.vector(), &state.alpha, noise);
        let q = assemble_quadratic(terms, &state.epsilon, &state.alpha);
        state.phases = optimize_phases(
            &q,
            &state.phases,
            config.ris_mode,
            config.tau_max,
            config.mm_tol,
            config.ellipsoid_tol,
        )?;
        timings.ris_ms = elapsed_ms(clock);
    }

    if let (AntennaMode::Movable, Some(terms)) = (config.antenna_mode, &terms) {
        let clock = Instant::now();
        state.delta = update_delta(terms, state.phases.vector(), &state.alpha, noise);
        let aux = position_auxiliaries(scenario, &state.phases, &state.w, &state.delta, &state.alpha);
        let search = optimize_positions(
            &state.positions,
            &aux,
            scenario,
            &Region::from_config(config),
            &StepSettings::from_config(config),
        );
        state.positions = search.positions;
        timings.positions_ms = elapsed_ms(clock);
    }

    state.iteration += 1;
    Ok(timings)
}

/// Runs the outer loop from [`initialize`] until the relative sum-rate
/// change drops below `config.tol` or `config.r_max` iterations pass.
pub fn solve(scenario: &Scenario, config: &SystemConfig) -> std::result::Result<(SolverState, SolverTrace), SolveFailure> {
    let state = initialize(scenario, config).map_err(|error| SolveFailure {
        error,
        state: Box::new(empty_state(config)),
        trace: SolverTrace { initial_rate: 0.0, records: Vec::new(), status: SolveStatus::IterationCap },
    })?;
    solve_from(scenario, config, state)
}

/// Same as [`solve`] from a caller-supplied starting state.
pub fn solve_from(
    scenario: &Scenario,
    config: &SystemConfig,
    state: SolverState,
) -> std::result::Result<(SolverState, SolverTrace), SolveFailure> {
    solve_observed(scenario, config, state, |_, _| {})
}

/// [`solve_from`] that hands every completed iteration to `observe`.
pub fn solve_observed(
    scenario: &Scenario,
    config: &SystemConfig,
    mut state: SolverState,
    mut observe: impl FnMut(&SolverState, &IterationRecord),
) -> std::result::Result<(SolverState, SolverTrace), SolveFailure> {
    let start = Instant::now();
    let initial_rate = state_rate(scenario, config, &state);
    let mut trace = SolverTrace { initial_rate, records: Vec::new(), status: SolveStatus::IterationCap };
    let mut previous = initial_rate;
    for _ in 0..config.r_max {
        let snapshot = state.clone();
        match iterate(scenario, config, &mut state) {
            Ok(blocks) => {
                let rate = state_rate(scenario, config, &state);
                let record = IterationRecord {
                    iteration: state.iteration,
                    sum_rate: rate,
                    cum_ms: elapsed_ms(start),
                    blocks,
                };
                observe(&state, &record);
                trace.records.push(record);
                let converged = (rate - previous).abs() <= config.tol * previous.abs();
                previous = rate;
                if converged {
                    trace.status = SolveStatus::Converged;
                    break;
                }
            }
            Err(error) => {
                return Err(SolveFailure { error, state: Box::new(snapshot), trace });
            }
        }
    }
    Ok((state, trace))
}

fn empty_state(config: &SystemConfig) -> SolverState {
    SolverState {
        w: CMatrix::zeros(config.n_antennas, config.n_users),
        phases: RisPhases::zeros(config.n_ris),
        positions: AntennaPositions::new(Vec::new()),
        alpha: Vec::new(),
        beta: Vec::new(),
        epsilon: Vec::new(),
        delta: Vec::new(),
        iteration: 0,
    }
}

/// Sum-rate of `state` evaluated from scratch; used by checks that must not
/// share code paths with the solver's own bookkeeping.
pub fn rate_of(scenario: &Scenario, config: &SystemConfig, state: &SolverState) -> f64 {
    let gt = field_response_matrix(&state.positions, &scenario.path_directions, scenario.wavelength);
    let channels = channels_from_paths(&gt, &reflected_paths(scenario, &state.phases));
    sum_rate_from_sinrs(&sinrs(&channels, &state.w, config.noise_w))
}
