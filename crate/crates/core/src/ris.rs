//! φ-block: the quadratic transform with auxiliary `ε`, the quadratic form
//! `f₂(φ) = −φ^H U φ + 2 Re{V^H φ}`, and one solver per feasible set.
//!
//! Throughout, `φ = diag(Φ^H)` and user `k`'s amplitude from beam `i` is
//! `φ^H a_{k,i}` with `a_{k,i} = diag(h_k)^H G_r^H Λ G_t w_i`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{expj, hermitian_pinv_solve, hermitian_solve, max_eigenvalue, quad_form, CMatrix, CVector, C64};
use crate::model::{RisMode, RisPhases, Scenario};

/// Per-(user, beam) reflection vectors `a_{k,i}` for a fixed `W` and `T`.
#[derive(Debug, Clone)]
pub struct ReflectionTerms {
    a: Vec<Vec<CVector>>,
}

impl ReflectionTerms {
    /// `gt` is the BS field-response matrix for the current positions.
    pub fn new(scenario: &Scenario, gt: &CMatrix, w: &CMatrix) -> Self {
        let beams: Vec<CVector> = (0..w.ncols())
            .map(|i| {
                let mut paths = gt * w.column(i);
                for (z, nu) in paths.iter_mut().zip(scenario.path_gains.iter()) {
                    *z *= nu;
                }
                scenario.ris_response.ad_mul(&paths)
            })
            .collect();
        let a = scenario
            .user_channels
            .iter()
            .map(|h| {
                let hc = h.map(|z| z.conj());
                beams.iter().map(|b| hc.component_mul(b)).collect()
            })
            .collect();
        Self { a }
    }

    pub fn n_users(&self) -> usize {
        self.a.len()
    }

    pub fn vector(&self, k: usize, i: usize) -> &CVector {
        &self.a[k][i]
    }

    /// `φ^H a_{k,i}`, i.e. `H_k^H w_i`.
    pub fn amplitude(&self, k: usize, i: usize, phi: &CVector) -> C64 {
        phi.dotc(&self.a[k][i])
    }

    fn received(&self, k: usize, phi: &CVector, noise: f64) -> f64 {
        noise + (0..self.a[k].len()).map(|i| self.amplitude(k, i, phi).norm_sqr()).sum::<f64>()
    }
}

/// `ε_k = √(1+α_k) φ^H a_{k,k} / (Σ_i |φ^H a_{k,i}|² + σ²)`.
pub fn update_epsilon(terms: &ReflectionTerms, phi: &CVector, alpha: &[f64], noise: f64) -> Vec<C64> {
    (0..terms.n_users())
        .map(|k| terms.amplitude(k, k, phi) * ((1.0 + alpha[k]).sqrt() / terms.received(k, phi, noise)))
        .collect()
}

/// `Σ (1+α_k) γ_k / (1+γ_k)`, the ratio objective of the φ and T blocks.
pub fn fractional_objective(terms: &ReflectionTerms, phi: &CVector, alpha: &[f64], noise: f64) -> f64 {
    (0..terms.n_users())
        .map(|k| (1.0 + alpha[k]) * terms.amplitude(k, k, phi).norm_sqr() / terms.received(k, phi, noise))
        .sum()
}

/// Quadratic-transform objective for arbitrary `ε`.
pub fn transformed_objective(
    terms: &ReflectionTerms,
    phi: &CVector,
    eps: &[C64],
    alpha: &[f64],
    noise: f64,
) -> f64 {
    (0..terms.n_users())
        .map(|k| {
            2.0 * (1.0 + alpha[k]).sqrt() * (eps[k].conj() * terms.amplitude(k, k, phi)).re
                - eps[k].norm_sqr() * terms.received(k, phi, noise)
        })
        .sum()
}

/// `f₂(φ) = −φ^H U φ + 2 Re{V^H φ}` with `U` Hermitian PSD.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub u: CMatrix,
    pub v: CVector,
    pub lambda_max: f64,
}

impl QuadraticForm {
    pub fn new(u: CMatrix, v: CVector) -> Self {
        let lambda_max = max_eigenvalue(&u).max(0.0);
        Self { u, v, lambda_max }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn value(&self, phi: &CVector) -> f64 {
        -quad_form(&self.u, phi) + 2.0 * self.v.dotc(phi).re
    }

    /// MM minorizer of `f₂` built at `anchor` with `Ω = λ_max I`. Touches
    /// `f₂` at the anchor and lies below it everywhere.
    pub fn surrogate(&self, phi: &CVector, anchor: &CVector) -> f64 {
        let lm = self.lambda_max;
        let shifted = anchor * C64::new(lm, 0.0) - &self.u * anchor;
        -lm * phi.norm_squared() + 2.0 * phi.dotc(&shifted).re - anchor.dotc(&shifted).re
            + 2.0 * self.v.dotc(phi).re
    }
}

/// Collects `U` and `V` from the current `ε`:
/// `U = Σ_k |ε_k|² Σ_i a_{k,i} a_{k,i}^H`, `V = Σ_k √(1+α_k) ε_k* a_{k,k}`.
pub fn assemble_quadratic(terms: &ReflectionTerms, eps: &[C64], alpha: &[f64]) -> QuadraticForm {
    let m = terms.a.first().and_then(|row| row.first()).map_or(0, |v| v.len());
    let mut u = CMatrix::zeros(m, m);
    let mut v = CVector::zeros(m);
    let one = C64::new(1.0, 0.0);
    for k in 0..terms.n_users() {
        let weight = C64::new(eps[k].norm_sqr(), 0.0);
        for a in &terms.a[k] {
            u.gerc(weight, a, a, one);
        }
        v.axpy(eps[k].conj() * (1.0 + alpha[k]).sqrt(), &terms.a[k][k], one);
    }
    let u = (&u + u.adjoint()) * C64::new(0.5, 0.0);
    QuadraticForm::new(u, v)
}

/// One MM update on the unit-modulus set:
/// `φ_m ← exp(j∠[(Ω − U) φ_τ + V]_m)`. A zero entry keeps its phase.
pub fn mm_step(q: &QuadraticForm, phi: &CVector) -> CVector {
    let c = phi * C64::new(q.lambda_max, 0.0) - &q.u * phi + &q.v;
    c.zip_map(phi, |z, old| if z.norm() > 0.0 { expj(z.arg()) } else { expj(old.arg()) })
}

/// Maps every phase to the circularly nearest point of
/// `{0, 2π/κ, …, 2π(κ−1)/κ}`; ties go to the smaller phase. Moduli become 1.
pub fn quantize_phases(phi: &CVector, levels: u32) -> CVector {
    assert!(levels >= 2, "need at least two phase levels");
    let step = TAU / levels as f64;
    phi.map(|z| {
        let x = z.arg().rem_euclid(TAU) / step;
        let idx = ((x - 0.5).ceil() as i64).rem_euclid(levels as i64);
        expj(idx as f64 * step)
    })
}

/// Outcome of the ellipsoid dual solve.
#[derive(Debug, Clone)]
pub struct IrcSolution {
    pub phi: CVector,
    /// Final dual multipliers in the normalized problem (all zero when the
    /// unconstrained maximizer was already feasible).
    pub dual: Vec<f64>,
    pub iterations: usize,
    /// Normalized duality gap at exit.
    pub gap: f64,
}

fn clip_to_disk(phi: &CVector) -> CVector {
    phi.map(|z| {
        let r = z.norm();
        if r > 1.0 {
            z / r
        } else {
            z
        }
    })
}

/// Maximizes `f₂` over `|φ_m| ≤ 1` through its Lagrange dual
/// `g(η) = max_φ f₂(φ) − Σ η_m (|φ_m|² − 1)`, minimized over `η ≥ 0` with
/// the central-cut ellipsoid method. The primal iterate is
/// `φ(η) = (U + diag η)^{-1} V`, clipped to the unit disk; the best clipped
/// iterate is periodically polished by projected-gradient ascent.
///
/// Stops once the primal/dual gap or the ellipsoid's own gap bound falls
/// below `tol` (in units of `max(λ_max, max|V_m|)`). The iteration cap is
/// `500·M`; hitting it yields [`Error::EllipsoidCap`] carrying the best
/// feasible point.
pub fn solve_irc(q: &QuadraticForm, tol: f64) -> Result<IrcSolution> {
    let m = q.dim();
    if q.v.iter().all(|z| z.norm() == 0.0) {
        return Ok(IrcSolution { phi: CVector::zeros(m), dual: vec![0.0; m], iterations: 0, gap: 0.0 });
    }
    let free = hermitian_pinv_solve(&q.u, &q.v, 1e-12);
    // Only a stationary point if V lies in the range of U; otherwise f₂ grows
    // without bound along the null space and some constraint must bind.
    let stationary = (&q.u * &free - &q.v).norm() <= 1e-9 * q.v.norm();
    if stationary && free.iter().all(|z| z.norm() <= 1.0) {
        return Ok(IrcSolution { phi: free, dual: vec![0.0; m], iterations: 0, gap: 0.0 });
    }

    let scale = q.v.iter().map(|z| z.norm()).fold(q.lambda_max, f64::max);
    let u = &q.u / C64::new(scale, 0.0);
    let v = &q.v / C64::new(scale, 0.0);
    let value = |phi: &CVector| -quad_form(&u, phi) + 2.0 * v.dotc(phi).re;

    let dim = m as f64;
    let radius = (10.0 * dim.sqrt()).max(dim + dim.sqrt());
    let mut center = vec![1.0f64; m];
    let mut shape = DMatrix::<f64>::identity(m, m) * (radius * radius);

    let mut best_phi = clip_to_disk(&free);
    let mut best_primal = value(&best_phi);
    if best_primal < 0.0 {
        best_phi = CVector::zeros(m);
        best_primal = 0.0;
    }
    let mut best_dual = f64::INFINITY;
    let cap = 500 * m;

    for it in 0..cap {
        let cut: Vec<f64> = match center
            .iter()
            .enumerate()
            .filter(|(_, &x)| x < 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            Some((j, _)) => {
                let mut g = vec![0.0; m];
                g[j] = -1.0;
                g
            }
            None => {
                let mut sys = u.clone();
                for (j, &eta) in center.iter().enumerate() {
                    sys[(j, j)] += eta;
                }
                let phi = hermitian_solve(&sys, &v).unwrap_or_else(|| hermitian_pinv_solve(&sys, &v, 1e-14));
                let slack: Vec<f64> = phi.iter().map(|z| 1.0 - z.norm_sqr()).collect();
                let dual = value(&phi) + center.iter().zip(&slack).map(|(e, s)| e * s).sum::<f64>();
                best_dual = best_dual.min(dual);
                let candidate = clip_to_disk(&phi);
                let primal = value(&candidate);
                if primal > best_primal {
                    best_primal = primal;
                    best_phi = candidate;
                }
                if (it + 1) % POLISH_EVERY == 0 {
                    polish(&u, &v, &mut best_phi, &mut best_primal, POLISH_STEPS);
                }
                let gap = best_dual - best_primal;
                let bound = quad_form_real(&shape, &slack).max(0.0).sqrt();
                if gap <= tol * best_primal.abs().max(1.0) || bound <= tol {
                    return Ok(IrcSolution { phi: best_phi, dual: center, iterations: it + 1, gap: gap.max(0.0) });
                }
                slack
            }
        };
        ellipsoid_cut(&mut center, &mut shape, &cut);
    }
    polish(&u, &v, &mut best_phi, &mut best_primal, 50 * POLISH_STEPS);
    let gap = best_dual - best_primal;
    if gap <= tol * best_primal.abs().max(1.0) {
        return Ok(IrcSolution { phi: best_phi, dual: center, iterations: cap, gap: gap.max(0.0) });
    }
    Err(Error::EllipsoidCap {
        iterations: cap,
        gap: best_dual - best_primal,
        best: Box::new(best_phi),
    })
}

const POLISH_EVERY: usize = 50;
const POLISH_STEPS: usize = 100;

/// Projected-gradient ascent of the concave `f₂` over the unit disks with
/// step `1/λ_max`; monotone, so it only ever improves the primal bound.
/// Clipped dual iterates are poor primal points when `U` is nearly
/// singular, and this closes the resulting gap.
fn polish(u: &CMatrix, v: &CVector, phi: &mut CVector, value: &mut f64, steps: usize) {
    let lm = max_eigenvalue(u);
    if !(lm > 0.0) {
        return;
    }
    let f = |p: &CVector| -quad_form(u, p) + 2.0 * v.dotc(p).re;
    let mut x = phi.clone();
    let mut fx = f(&x);
    for _ in 0..steps {
        let next = clip_to_disk(&(&x + (v - u * &x) / C64::new(lm, 0.0)));
        let fn_ = f(&next);
        if fn_ <= fx {
            break;
        }
        x = next;
        fx = fn_;
    }
    if fx > *value {
        *phi = x;
        *value = fx;
    }
}

fn quad_form_real(p: &DMatrix<f64>, g: &[f64]) -> f64 {
    let n = g.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g[i] * p[(i, j)] * g[j];
        }
    }
    acc
}

/// Central cut keeping `{x : gᵀ(x − center) ≤ 0}`.
fn ellipsoid_cut(center: &mut [f64], shape: &mut DMatrix<f64>, g: &[f64]) {
    let n = center.len();
    let gp = &*shape * nalgebra::DVector::from_column_slice(g);
    let norm = g.iter().zip(gp.iter()).map(|(a, b)| a * b).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return;
    }
    let step = gp / norm;
    let nf = n as f64;
    for (x, s) in center.iter_mut().zip(step.iter()) {
        *x -= s / (nf + 1.0);
    }
    if n == 1 {
        *shape *= 0.25;
        return;
    }
    let outer = &step * step.transpose();
    *shape = (&*shape - outer * (2.0 / (nf + 1.0))) * (nf * nf / (nf * nf - 1.0));
}

/// Runs the solver for `mode` starting from `current`.
///
/// The starting point is always a candidate, so `f₂` of the result is never
/// below `f₂(current)` when `current` already satisfies `mode`.
pub fn optimize_phases(
    q: &QuadraticForm,
    current: &RisPhases,
    mode: RisMode,
    tau_max: usize,
    mm_tol: f64,
    ellipsoid_tol: f64,
) -> Result<RisPhases> {
    let start = current.vector();
    match mode {
        RisMode::Fixed => Ok(current.clone()),
        RisMode::Irc => {
            let sol = solve_irc(q, ellipsoid_tol)?;
            if current.satisfies(RisMode::Irc) && q.value(start) > q.value(&sol.phi) {
                Ok(current.clone())
            } else {
                Ok(RisPhases::new(sol.phi))
            }
        }
        RisMode::Cps => {
            let mut phi = start.map(|z| expj(z.arg()));
            let mut f = q.value(&phi);
            for _ in 0..tau_max {
                let next = mm_step(q, &phi);
                let fn_ = q.value(&next);
                let done = (fn_ - f).abs() <= mm_tol * f.abs().max(f64::MIN_POSITIVE);
                phi = next;
                f = fn_;
                if done {
                    break;
                }
            }
            Ok(RisPhases::new(phi))
        }
        RisMode::Dps(levels) => {
            // The MM chain itself stays continuous; every iterate is quantized
            // as a candidate and the best candidate, the start included, wins.
            let mut best = quantize_phases(start, levels);
            let mut best_f = q.value(&best);
            let mut phi = start.map(|z| expj(z.arg()));
            let mut f = q.value(&phi);
            for _ in 0..tau_max {
                let next = mm_step(q, &phi);
                let fn_ = q.value(&next);
                let candidate = quantize_phases(&next, levels);
                let fc = q.value(&candidate);
                if fc > best_f {
                    best_f = fc;
                    best = candidate;
                }
                let done = (fn_ - f).abs() <= mm_tol * f.abs().max(f64::MIN_POSITIVE);
                phi = next;
                f = fn_;
                if done {
                    break;
                }
            }
            Ok(RisPhases::new(best))
        }
    }
}
