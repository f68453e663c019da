//! W-block: Lagrangian-dual auxiliaries `α`, quadratic-transform auxiliaries
//! `β`, and the closed-form beamformer with a bisection on the power dual.
//!
//! With `α` and `β` fixed the transformed objective
//!
//! ```text
//! Σ ln(1+α_k) − Σ α_k + Σ [ 2√(1+α_k) Re{β_k* A_k} − |β_k|² B_k ]
//! ```
//!
//! is a concave quadratic in `W`, where `A_k = H_k^H w_k` and
//! `B_k = σ² + Σ_i |H_k^H w_i|²`. Its maximizer under `Σ‖w_k‖² ≤ P` is
//! `w_k = √(1+α_k) β_k (λ0 I + Σ_i |β_i|² H_i H_i^H)^{-1} H_k`.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::model::link_gains;

pub const BISECTION_MAX_ITER: usize = 200;

/// Relative eigenvalue cutoff below which the dual system counts as singular.
const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformAuxiliaries {
    pub alpha: Vec<f64>,
    pub beta: Vec<C64>,
    /// `A_k = H_k^H w_k`.
    pub signal: Vec<C64>,
    /// `B_k = σ² + Σ_i |H_k^H w_i|²`.
    pub received: Vec<f64>,
}

/// `α_k = γ_k`.
pub fn update_alpha(sinrs: &[f64]) -> Vec<f64> {
    sinrs.to_vec()
}

/// Returns `(A_k, B_k)` for every user.
pub fn signal_terms(channels: &[CVector], w: &CMatrix, noise: f64) -> (Vec<C64>, Vec<f64>) {
    let gains = link_gains(channels, w);
    let a = channels
        .iter()
        .enumerate()
        .map(|(k, h)| h.dotc(&w.column(k)))
        .collect();
    let b = gains.iter().map(|row| noise + row.iter().sum::<f64>()).collect();
    (a, b)
}

/// `β_k = √(1+α_k) A_k / B_k`.
pub fn update_beta(alpha: &[f64], signal: &[C64], received: &[f64]) -> Vec<C64> {
    alpha
        .iter()
        .zip(signal)
        .zip(received)
        .map(|((&al, &a), &b)| a * ((1.0 + al).sqrt() / b))
        .collect()
}

/// Closed-form `α` and `β` for the current beamformer.
pub fn auxiliaries(channels: &[CVector], w: &CMatrix, noise: f64) -> BeamformAuxiliaries {
    let (signal, received) = signal_terms(channels, w, noise);
    let alpha: Vec<f64> = signal
        .iter()
        .zip(&received)
        .map(|(a, b)| {
            let s = a.norm_sqr();
            s / (b - s)
        })
        .collect();
    let beta = update_beta(&alpha, &signal, &received);
    BeamformAuxiliaries { alpha, beta, signal, received }
}

/// Transformed objective in nats for arbitrary `α`, `β`, and `W`.
pub fn lagrangian_objective(
    channels: &[CVector],
    w: &CMatrix,
    alpha: &[f64],
    beta: &[C64],
    noise: f64,
) -> f64 {
    let (a, b) = signal_terms(channels, w, noise);
    (0..alpha.len())
        .map(|k| {
            let al = alpha[k];
            (1.0 + al).ln() - al + 2.0 * (1.0 + al).sqrt() * (beta[k].conj() * a[k]).re
                - beta[k].norm_sqr() * b[k]
        })
        .sum()
}

fn dual_system(channels: &[CVector], beta: &[C64]) -> CMatrix {
    let n = channels.first().map_or(0, |h| h.len());
    let mut m = CMatrix::zeros(n, n);
    for (h, b) in channels.iter().zip(beta) {
        m.gerc(C64::new(b.norm_sqr(), 0.0), h, h, C64::new(1.0, 0.0));
    }
    // Hermitian by construction; symmetrize rounding.
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn right_hand_sides(channels: &[CVector], alpha: &[f64], beta: &[C64]) -> CMatrix {
    let n = channels.first().map_or(0, |h| h.len());
    let mut r = CMatrix::zeros(n, channels.len());
    for (k, h) in channels.iter().enumerate() {
        r.set_column(k, &(h * (beta[k] * (1.0 + alpha[k]).sqrt())));
    }
    r
}

/// Beamformer for a fixed power dual `λ0`. Fails with
/// [`Error::NeedsPositiveDual`] when `λ0 = 0` and the system is singular.
pub fn update_w(channels: &[CVector], alpha: &[f64], beta: &[C64], dual: f64) -> Result<CMatrix> {
    let m = dual_system(channels, beta);
    let n = m.nrows();
    let r = right_hand_sides(channels, alpha, beta);
    if dual <= 0.0 {
        let eig = m.clone().symmetric_eigenvalues();
        let top = eig.iter().copied().fold(0.0_f64, f64::max);
        let bottom = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if top <= 0.0 || bottom <= SINGULAR_RTOL * top {
            return Err(Error::NeedsPositiveDual);
        }
    }
    let system = m + CMatrix::identity(n, n) * C64::new(dual.max(0.0), 0.0);
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::numerical("beamformer", "dual system not positive definite"))?;
    Ok(chol.solve(&r))
}

/// Eigen-decomposed dual system: `W(λ) = Q (D + λ)^{-1} Q^H R`, which makes
/// the power a cheap, exactly monotone function of `λ`.
struct SpectralSystem {
    q: CMatrix,
    d: Vec<f64>,
    projected: CMatrix,
    row_energy: Vec<f64>,
}

impl SpectralSystem {
    fn new(channels: &[CVector], alpha: &[f64], beta: &[C64]) -> Self {
        let eig = dual_system(channels, beta).symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
        let mut projected = eig.eigenvectors.adjoint() * right_hand_sides(channels, alpha, beta);
        let mut d = Vec::with_capacity(eig.eigenvalues.len());
        for (j, &v) in eig.eigenvalues.iter().enumerate() {
            if v <= SINGULAR_RTOL * top {
                // The right-hand sides lie in the range of the system, so these
                // components are rounding noise. Dropping them gives the
                // minimum-norm solution at λ0 = 0.
                projected.row_mut(j).fill(C64::new(0.0, 0.0));
                d.push(0.0);
            } else {
                d.push(v);
            }
        }
        let row_energy = (0..projected.nrows()).map(|j| projected.row(j).norm_squared()).collect();
        Self { q: eig.eigenvectors, d, projected, row_energy }
    }

    fn power(&self, dual: f64) -> f64 {
        self.d
            .iter()
            .zip(&self.row_energy)
            .filter(|&(_, &e)| e > 0.0)
            .map(|(&d, &e)| e / (d + dual).powi(2))
            .sum()
    }

    fn beamformer(&self, dual: f64) -> CMatrix {
        let mut scaled = self.projected.clone();
        for (j, &d) in self.d.iter().enumerate() {
            let s = if self.row_energy[j] > 0.0 { 1.0 / (d + dual) } else { 0.0 };
            scaled.row_mut(j).scale_mut(s);
        }
        &self.q * scaled
    }
}

/// Smallest `λ0 ≥ 0` whose beamformer fits the power budget, and that
/// beamformer. When the budget binds, the returned power lies in
/// `[P(1 − tol), P]`.
pub fn solve_power_dual(
    channels: &[CVector],
    alpha: &[f64],
    beta: &[C64],
    pmax: f64,
    tol: f64,
) -> Result<(f64, CMatrix)> {
    let sys = SpectralSystem::new(channels, alpha, beta);
    if sys.power(0.0) <= pmax {
        return Ok((0.0, sys.beamformer(0.0)));
    }
    // power(λ) ≤ ‖R‖² / λ², so this upper bracket is always feasible.
    let total: f64 = sys.row_energy.iter().sum();
    let mut hi = (total / pmax).sqrt();
    while sys.power(hi) > pmax {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_MAX_ITER {
        let p = sys.power(hi);
        if pmax - p <= tol * pmax || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok((hi, sys.beamformer(hi)));
        }
        let mid = 0.5 * (lo + hi);
        if sys.power(mid) > pmax {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::numerical(
        "power dual bisection",
        format!("no convergence in {BISECTION_MAX_ITER} iterations"),
    ))
}

/// One W-block: closed-form `α`, `β`, then the power-constrained update.
pub fn beamform_block(
    channels: &[CVector],
    w: &CMatrix,
    noise: f64,
    pmax: f64,
    tol: f64,
) -> Result<(BeamformAuxiliaries, CMatrix)> {
    let aux = auxiliaries(channels, w, noise);
    let (_, w_new) = solve_power_dual(channels, &aux.alpha, &aux.beta, pmax, tol)?;
    Ok((aux, w_new))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sinrs, sum_rate_from_sinrs};
    use std::f64::consts::LN_2;

    fn channels(seed: u64, n: usize, k: usize) -> Vec<CVector> {
        // small LCG so the test does not depend on the scenario sampler
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        (0..k)
            .map(|_| CVector::from_fn(n, |_, _| C64::new(next(), next())))
            .collect()
    }

    fn uniform_w(n: usize, k: usize, p: f64) -> CMatrix {
        CMatrix::from_element(n, k, C64::new((p / (n * k) as f64).sqrt(), 0.0))
    }

    #[test]
    fn alpha_is_identity() {
        assert_eq!(update_alpha(&[0.0, 3.0]), vec![0.0, 3.0]);
    }

    #[test]
    fn beta_hand_value() {
        // A = 1, σ² = 1, α = γ = 1 ⇒ B = 2, β = √2/2
        let b = update_beta(&[1.0], &[C64::new(1.0, 0.0)], &[2.0]);
        assert!((b[0] - C64::new(2f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
        let b = update_beta(&[0.0], &[C64::new(0.0, 0.0)], &[1.0]);
        assert_eq!(b[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn beta_maximizes_bracket() {
        let h = channels(3, 3, 2);
        let w = uniform_w(3, 2, 1.0);
        let aux = auxiliaries(&h, &w, 0.1);
        let bracket = |b: C64, k: usize| {
            2.0 * (1.0 + aux.alpha[k]).sqrt() * (b.conj() * aux.signal[k]).re
                - b.norm_sqr() * aux.received[k]
        };
        for k in 0..2 {
            let best = bracket(aux.beta[k], k);
            for d in [C64::new(1e-3, 0.0), C64::new(0.0, -1e-3), C64::new(-2e-2, 5e-3)] {
                assert!(bracket(aux.beta[k] + d, k) < best);
            }
        }
    }

    #[test]
    fn transform_is_tight() {
        for seed in 0..10 {
            let h = channels(seed, 4, 3);
            let w = uniform_w(4, 3, 2.0);
            let aux = auxiliaries(&h, &w, 0.3);
            let r_nats = sum_rate_from_sinrs(&sinrs(&h, &w, 0.3)) * LN_2;
            let rp = lagrangian_objective(&h, &w, &aux.alpha, &aux.beta, 0.3);
            assert!((rp - r_nats).abs() <= 1e-9 * r_nats, "{rp} vs {r_nats}");
        }
    }

    #[test]
    fn zero_beta_zero_w() {
        let h = channels(1, 3, 2);
        let w = update_w(&h, &[0.5, 0.5], &[C64::new(0.0, 0.0); 2], 1.0).unwrap();
        assert_eq!(w.norm(), 0.0);
        assert!(matches!(
            update_w(&h, &[0.5, 0.5], &[C64::new(0.0, 0.0); 2], 0.0),
            Err(Error::NeedsPositiveDual)
        ));
    }

    #[test]
    fn single_user_is_mrt_at_full_power() {
        let h = channels(5, 4, 1);
        let cosine = |w: &CMatrix| h[0].dotc(&w.column(0)).norm() / (h[0].norm() * w.column(0).norm());
        // one step from any start points along the channel
        let (_, w) = beamform_block(&h, &uniform_w(4, 1, 1.0), 0.01, 1.0, 1e-12).unwrap();
        assert!((cosine(&w) - 1.0).abs() < 1e-12);
        // and full-power MRT is a fixed point
        let mrt = CMatrix::from_column_slice(4, 1, (&h[0] / C64::new(h[0].norm(), 0.0)).as_slice());
        let (_, w) = beamform_block(&h, &mrt, 0.01, 1.0, 1e-12).unwrap();
        assert!((w.norm_squared() - 1.0).abs() < 1e-10);
        assert!((cosine(&w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationarity_of_regularized_objective() {
        // w_k maximizes the λ0-regularized transformed objective; its
        // finite-difference gradient vanishes.
        let h = channels(9, 3, 2);
        let w0 = uniform_w(3, 2, 1.0);
        let aux = auxiliaries(&h, &w0, 0.2);
        let dual = 0.7;
        let w = update_w(&h, &aux.alpha, &aux.beta, dual).unwrap();
        let obj = |w: &CMatrix| lagrangian_objective(&h, w, &aux.alpha, &aux.beta, 0.2) - dual * w.norm_squared();
        let step = 1e-6;
        let mut worst: f64 = 0.0;
        for idx in 0..w.len() {
            for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut plus = w.clone();
                plus[idx] += dir * step;
                let mut minus = w.clone();
                minus[idx] -= dir * step;
                worst = worst.max(((obj(&plus) - obj(&minus)) / (2.0 * step)).abs());
            }
        }
        assert!(worst < 1e-8, "residual {worst}");
    }

    #[test]
    fn power_decreases_in_dual() {
        let h = channels(4, 4, 3);
        let aux = auxiliaries(&h, &uniform_w(4, 3, 1.0), 0.05);
        let mut last = f64::INFINITY;
        for i in 0..60 {
            let dual = 1e-3 * 1.3f64.powi(i);
            let p = update_w(&h, &aux.alpha, &aux.beta, dual).unwrap().norm_squared();
            assert!(p <= last * (1.0 + 1e-12));
            last = p;
        }
    }

    #[test]
    fn inactive_budget_gives_zero_dual() {
        let h = channels(2, 3, 3);
        let aux = auxiliaries(&h, &uniform_w(3, 3, 1.0), 0.05);
        let free = update_w(&h, &aux.alpha, &aux.beta, 0.0).unwrap();
        let (dual, w) = solve_power_dual(&h, &aux.alpha, &aux.beta, 10.0 * free.norm_squared(), 1e-12).unwrap();
        assert_eq!(dual, 0.0);
        assert!((w - free).norm() < 1e-9 * (1.0 + dual));
    }

    #[test]
    fn binding_budget_is_met() {
        for seed in 0..10 {
            let h = channels(seed, 4, 4);
            let aux = auxiliaries(&h, &uniform_w(4, 4, 1.0), 0.05);
            let free = update_w(&h, &aux.alpha, &aux.beta, 0.0).unwrap();
            let budget = 0.3 * free.norm_squared();
            let (dual, w) = solve_power_dual(&h, &aux.alpha, &aux.beta, budget, 1e-8).unwrap();
            assert!(dual > 0.0);
            let p = w.norm_squared();
            assert!(p <= budget && (budget - p) <= 1e-8 * budget, "{p} vs {budget}");
            let chol = update_w(&h, &aux.alpha, &aux.beta, dual).unwrap();
            assert!((chol - w).norm() <= 1e-9 * budget.sqrt());
        }
    }

    #[test]
    fn block_never_decreases_rate() {
        for seed in 0..20 {
            let h = channels(seed, 4, 4);
            let mut w = uniform_w(4, 4, 1.0);
            let mut rate = sum_rate_from_sinrs(&sinrs(&h, &w, 0.05));
            for _ in 0..10 {
                let (_, next) = beamform_block(&h, &w, 0.05, 1.0, 1e-12).unwrap();
                assert!(next.norm_squared() <= 1.0 + 1e-9);
                let r = sum_rate_from_sinrs(&sinrs(&h, &next, 0.05));
                assert!(r >= rate * (1.0 - 1e-9), "{r} < {rate}");
                rate = r;
                w = next;
            }
        }
    }
}
