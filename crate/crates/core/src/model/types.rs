use std::f64::consts::TAU;

use rand::Rng;

use super::config::RisMode;
use crate::linalg::{expj, CMatrix, CVector};

/// Planar antenna positions `t_n = [x_n, y_n]` in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaPositions(Vec<[f64; 2]>);

impl AntennaPositions {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        Self(points)
    }

    /// Uniform linear array along the x-axis starting at the origin.
    pub fn ula(n: usize, spacing: f64) -> Self {
        Self((0..n).map(|i| [i as f64 * spacing, 0.0]).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn get(&self, n: usize) -> [f64; 2] {
        self.0[n]
    }

    pub fn set(&mut self, n: usize, p: [f64; 2]) {
        self.0[n] = p;
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.0[i], self.0[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// `f64::INFINITY` for fewer than two antennas.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.0.len() {
            for j in i + 1..self.0.len() {
                best = best.min(self.distance(i, j));
            }
        }
        best
    }
}

/// RIS configuration stored as `φ = diag(Φ^H)`, i.e. the conjugated
/// reflection coefficients. Every constraint set is closed under
/// conjugation, so the mode checks apply to `φ` directly.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhases(CVector);

pub const MODULUS_TOL: f64 = 1e-9;

impl RisPhases {
    pub fn new(phi: CVector) -> Self {
        Self(phi)
    }

    pub fn from_coefficients(psi: &CVector) -> Self {
        Self(psi.map(|z| z.conj()))
    }

    /// Reflection coefficients `ψ_m`.
    pub fn coefficients(&self) -> CVector {
        self.0.map(|z| z.conj())
    }

    pub fn zeros(m: usize) -> Self {
        Self(CVector::zeros(m))
    }

    /// Unit-modulus entries with phases uniform on `[0, 2π)`.
    pub fn random<R: Rng>(m: usize, rng: &mut R) -> Self {
        Self(CVector::from_fn(m, |_, _| expj(rng.random_range(0.0..TAU))))
    }

    pub fn vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the feasible set of `mode` at the tolerances of the RIS
    /// invariants (`1e-9` on modulus and grid distance).
    pub fn satisfies(&self, mode: RisMode) -> bool {
        match mode {
            RisMode::Irc => self.0.iter().all(|z| z.norm() <= 1.0 + MODULUS_TOL),
            RisMode::Cps | RisMode::Fixed => self.is_unit_modulus(),
            RisMode::Dps(levels) => {
                self.is_unit_modulus()
                    && self.0.iter().all(|z| grid_distance(z.arg(), levels) <= MODULUS_TOL)
            }
        }
    }

    fn is_unit_modulus(&self) -> bool {
        self.0.iter().all(|z| (z.norm() - 1.0).abs() <= MODULUS_TOL)
    }
}

/// Circular distance from `phase` to the nearest point of the `levels`-grid.
pub(crate) fn grid_distance(phase: f64, levels: u32) -> f64 {
    let step = TAU / levels as f64;
    let r = phase.rem_euclid(step);
    r.min(step - r)
}

/// Transmit beamforming matrix `W`, `N × K`, column `k` serves user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(pub CMatrix);

impl Beamformer {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self(CMatrix::zeros(n, k))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn total_power(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn within_budget(&self, pmax: f64) -> bool {
        self.total_power() <= pmax * (1.0 + MODULUS_TOL)
    }

    pub fn column(&self, k: usize) -> CVector {
        self.0.column(k).into_owned()
    }
}

impl From<CMatrix> for Beamformer {
    fn from(m: CMatrix) -> Self {
        Self(m)
    }
}
