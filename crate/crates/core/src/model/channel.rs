//! Deterministic channel construction and rate evaluation.
//!
//! The cascaded BS → RIS → user channel of user `k` is
//! `H_k = G_t^H Λ^H G_r diag(h_k) φ`, where `G_t` depends on the antenna
//! positions and `φ` on the RIS configuration. Dimension mismatches are
//! programming errors and panic.

use std::f64::consts::TAU;

use super::scenario::{PathDirection, Scenario};
use super::types::{AntennaPositions, RisPhases};
use crate::linalg::{expj, CMatrix, CVector};

/// Field-response matrix, `L × N`, entry `(l, n) = exp(j 2π/λ · t_nᵀ ρ_l)`.
pub fn field_response_matrix(
    positions: &AntennaPositions,
    directions: &[PathDirection],
    wavelength: f64,
) -> CMatrix {
    let k0 = TAU / wavelength;
    let rhos: Vec<[f64; 2]> = directions.iter().map(PathDirection::rho).collect();
    CMatrix::from_fn(directions.len(), positions.len(), |l, n| {
        let t = positions.get(n);
        expj(k0 * (t[0] * rhos[l][0] + t[1] * rhos[l][1]))
    })
}

/// Path-domain vectors `c_k = Λ^H G_r diag(h_k) φ`, one `L`-vector per user.
/// They do not depend on the antenna positions.
pub fn reflected_paths(scenario: &Scenario, phases: &RisPhases) -> Vec<CVector> {
    let phi = phases.vector();
    assert_eq!(phi.len(), scenario.n_ris(), "RIS phase length mismatch");
    scenario
        .user_channels
        .iter()
        .map(|h| {
            let weighted = h.component_mul(phi);
            let mut c = &scenario.ris_response * weighted;
            for (z, nu) in c.iter_mut().zip(scenario.path_gains.iter()) {
                *z *= nu.conj();
            }
            c
        })
        .collect()
}

/// `H_k = G_t^H c_k`.
pub fn channels_from_paths(gt: &CMatrix, paths: &[CVector]) -> Vec<CVector> {
    paths.iter().map(|c| gt.ad_mul(c)).collect()
}

/// Effective BS → user channels `H_k`, one `N`-vector per user.
pub fn effective_channel(
    scenario: &Scenario,
    phases: &RisPhases,
    positions: &AntennaPositions,
) -> Vec<CVector> {
    let gt = field_response_matrix(positions, &scenario.path_directions, scenario.wavelength);
    channels_from_paths(&gt, &reflected_paths(scenario, phases))
}

/// `|H_k^H w_i|²` for all `(k, i)`, row-major by `k`.
pub fn link_gains(channels: &[CVector], w: &CMatrix) -> Vec<Vec<f64>> {
    channels
        .iter()
        .map(|h| {
            assert_eq!(h.len(), w.nrows(), "channel/beamformer dimension mismatch");
            (0..w.ncols()).map(|i| h.dotc(&w.column(i)).norm_sqr()).collect()
        })
        .collect()
}

/// SINR of every user from precomputed channels.
pub fn sinrs(channels: &[CVector], w: &CMatrix, noise: f64) -> Vec<f64> {
    assert_eq!(channels.len(), w.ncols(), "one beamformer column per user");
    link_gains(channels, w)
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let interference: f64 = row.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, g)| g).sum();
            row[k] / (interference + noise)
        })
        .collect()
}

/// SINR of user `k` (zero-based).
pub fn sinr(
    k: usize,
    w: &CMatrix,
    phases: &RisPhases,
    positions: &AntennaPositions,
    scenario: &Scenario,
    noise: f64,
) -> f64 {
    let channels = effective_channel(scenario, phases, positions);
    sinrs(&channels, w, noise)[k]
}

/// `Σ log2(1 + γ_k)` in bits/s/Hz.
pub fn sum_rate_from_sinrs(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|g| (1.0 + g).log2()).sum()
}

pub fn sum_rate(
    w: &CMatrix,
    phases: &RisPhases,
    positions: &AntennaPositions,
    scenario: &Scenario,
    noise: f64,
) -> f64 {
    let channels = effective_channel(scenario, phases, positions);
    sum_rate_from_sinrs(&sinrs(&channels, w, noise))
}
