//! T-block: quadratic-transform auxiliary `δ`, the position objective
//!
//! ```text
//! f₅(T) = Σ_k 2√(1+α_k) Re{P_k^H G_t w_k} − P_k^H G_t Π G_t^H P_k
//! ```
//!
//! with `P_k = Λ^H G_r diag(h_k) φ δ_k` and `Π = Σ_i w_i w_i^H`, its analytic
//! gradient, and a per-antenna gradient ascent with backtracking.

use std::f64::consts::TAU;

use crate::linalg::{CMatrix, CVector, C64};
use crate::model::{field_response_matrix, reflected_paths, AntennaPositions, RisPhases, Scenario, SystemConfig};
use crate::ris::{update_epsilon, ReflectionTerms};

/// Everything the position objective needs besides `T` itself.
#[derive(Debug, Clone)]
pub struct PositionAuxiliaries {
    pub delta: Vec<C64>,
    /// `P_k`, one `L`-vector per user.
    pub paths: Vec<CVector>,
    /// `Π = Σ_i w_i w_i^H`.
    pub pi: CMatrix,
    /// `√(1+α_k)`.
    pub weights: Vec<f64>,
    pub w: CMatrix,
}

/// `δ` has the same closed form as `ε`, evaluated at the current `φ` and `W`.
pub fn update_delta(terms: &ReflectionTerms, phi: &CVector, alpha: &[f64], noise: f64) -> Vec<C64> {
    update_epsilon(terms, phi, alpha, noise)
}

pub fn position_auxiliaries(
    scenario: &Scenario,
    phases: &RisPhases,
    w: &CMatrix,
    delta: &[C64],
    alpha: &[f64],
) -> PositionAuxiliaries {
    let paths = reflected_paths(scenario, phases)
        .into_iter()
        .zip(delta)
        .map(|(c, d)| c * *d)
        .collect();
    PositionAuxiliaries {
        delta: delta.to_vec(),
        paths,
        pi: w * w.adjoint(),
        weights: alpha.iter().map(|a| (1.0 + a).sqrt()).collect(),
        w: w.clone(),
    }
}

/// Evaluates `f₅` at arbitrary (possibly infeasible) positions.
pub fn position_objective(positions: &AntennaPositions, aux: &PositionAuxiliaries, scenario: &Scenario) -> f64 {
    let gt = field_response_matrix(positions, &scenario.path_directions, scenario.wavelength);
    aux.paths
        .iter()
        .enumerate()
        .map(|(k, p)| {
            // y = G_t^H P_k, so P_k^H G_t w = y^H w.
            let y = gt.ad_mul(p);
            let own = y.dotc(&aux.w.column(k)).re;
            let spread = (0..aux.w.ncols()).map(|i| y.dotc(&aux.w.column(i)).norm_sqr()).sum::<f64>();
            2.0 * aux.weights[k] * own - spread
        })
        .sum()
}

/// Analytic `∇_{t_n} f₅` (zero-based `n`) as the sum of a linear term and
/// the cross- and self-interaction terms of the quadratic part.
pub fn position_gradient(
    positions: &AntennaPositions,
    n: usize,
    aux: &PositionAuxiliaries,
    scenario: &Scenario,
) -> [f64; 2] {
    let k0 = TAU / scenario.wavelength;
    let rho: Vec<[f64; 2]> = scenario.path_directions.iter().map(|d| d.rho()).collect();
    let l_count = rho.len();
    let proj = |t: [f64; 2], r: [f64; 2]| t[0] * r[0] + t[1] * r[1];
    let tn = positions.get(n);
    let n_ant = positions.len();
    // |b| sin(θ + ∠b) = Im{b e^{jθ}}
    let im_rot = |b: C64, theta: f64| (b * C64::from_polar(1.0, theta)).im;

    let mut grad = [0.0; 2];
    for (k, p) in aux.paths.iter().enumerate() {
        let mut linear = [0.0; 2];
        let mut cross = [0.0; 2];
        let mut own = [0.0; 2];
        let wkn = aux.w[(n, k)];
        for l in 0..l_count {
            let theta = k0 * proj(tn, rho[l]);
            let s = im_rot(p[l].conj() * wkn, theta);
            for d in 0..2 {
                linear[d] += -2.0 * k0 * rho[l][d] * s;
            }
            for (np, tp) in positions.points().iter().enumerate() {
                if np == n {
                    continue;
                }
                for lp in 0..l_count {
                    let b = p[l].conj() * p[lp] * aux.pi[(n, np)] * C64::from_polar(1.0, -k0 * proj(*tp, rho[lp]));
                    let s = im_rot(b, theta);
                    for d in 0..2 {
                        cross[d] += 2.0 * k0 * rho[l][d] * s;
                    }
                }
            }
            for lp in 0..l_count {
                let diff = [rho[l][0] - rho[lp][0], rho[l][1] - rho[lp][1]];
                let c = p[l].conj() * p[lp] * aux.pi[(n, n)];
                let s = im_rot(c, k0 * proj(tn, diff));
                for d in 0..2 {
                    own[d] += k0 * diff[d] * s;
                }
            }
        }
        for d in 0..2 {
            grad[d] += aux.weights[k] * linear[d] + cross[d] + own[d];
        }
    }
    debug_assert!(n < n_ant);
    grad
}

/// The square transmit region `[0, side]²` and the minimum antenna spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub side: f64,
    pub min_distance: f64,
}

/// Relative slack on the spacing check so that lattice layouts built from
/// the same `λ` are not rejected by rounding.
const SPACING_RTOL: f64 = 1e-12;

impl Region {
    pub fn from_config(config: &SystemConfig) -> Self {
        Self {
            side: config.region_side(),
            min_distance: config.min_distance(),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..=self.side).contains(&p[0]) && (0.0..=self.side).contains(&p[1])
    }

    fn spaced(&self, d: f64) -> bool {
        d >= self.min_distance * (1.0 - SPACING_RTOL)
    }

    pub fn feasible(&self, positions: &AntennaPositions) -> bool {
        positions.points().iter().all(|&p| self.contains(p))
            && (0..positions.len()).all(|i| (i + 1..positions.len()).all(|j| self.spaced(positions.distance(i, j))))
    }

    /// Feasibility of moving antenna `n` to `p`, everything else fixed.
    fn admits_move(&self, positions: &AntennaPositions, n: usize, p: [f64; 2]) -> bool {
        self.contains(p)
            && positions
                .points()
                .iter()
                .enumerate()
                .all(|(j, q)| j == n || self.spaced((p[0] - q[0]).hypot(p[1] - q[1])))
    }
}

/// Region membership and minimum spacing for the configured geometry.
pub fn feasible(positions: &AntennaPositions, config: &SystemConfig) -> bool {
    Region::from_config(config).feasible(positions)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSettings {
    /// Initial displacement per trial move, meters.
    pub mu0: f64,
    /// Smallest displacement tried before giving up on an antenna, meters.
    pub mu_min: f64,
    pub q_max: usize,
    /// Relative `f₅` change per sweep that counts as converged.
    pub rel_tol: f64,
}

impl StepSettings {
    pub fn from_config(config: &SystemConfig) -> Self {
        let lambda = config.wavelength();
        Self {
            mu0: config.mu0_lambda * lambda,
            mu_min: config.mu_min_lambda * lambda,
            q_max: config.q_max,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PositionSearch {
    pub positions: AntennaPositions,
    /// `f₅` at the start and after every accepted move.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
}

/// Gauss–Seidel gradient ascent over the antennas. A trial move goes a
/// distance `μ` along `∇_{t_n} f₅ / ‖∇_{t_n} f₅‖`; it is accepted when the
/// new layout is feasible and `f₅` strictly improves, otherwise `μ` is halved
/// until it drops below `mu_min`. The start must be feasible.
pub fn optimize_positions(
    start: &AntennaPositions,
    aux: &PositionAuxiliaries,
    scenario: &Scenario,
    region: &Region,
    steps: &StepSettings,
) -> PositionSearch {
    let mut positions = start.clone();
    let mut f = position_objective(&positions, aux, scenario);
    let mut trace = vec![f];
    let mut sweeps = 0;
    for _ in 0..steps.q_max {
        sweeps += 1;
        let f_start = f;
        for n in 0..positions.len() {
            let g = position_gradient(&positions, n, aux, scenario);
            let norm = g[0].hypot(g[1]);
            if !(norm > 0.0 && norm.is_finite()) {
                continue;
            }
            let dir = [g[0] / norm, g[1] / norm];
            let base = positions.get(n);
            let mut mu = steps.mu0;
            while mu >= steps.mu_min {
                let cand = [base[0] + mu * dir[0], base[1] + mu * dir[1]];
                if region.admits_move(&positions, n, cand) {
                    let mut trial = positions.clone();
                    trial.set(n, cand);
                    let ft = position_objective(&trial, aux, scenario);
                    if ft > f {
                        positions = trial;
                        f = ft;
                        trace.push(f);
                        break;
                    }
                }
                mu /= 2.0;
            }
        }
        if (f - f_start).abs() <= steps.rel_tol * f_start.abs() {
            break;
        }
    }
    PositionSearch { positions, objective_trace: trace, sweeps }
}
