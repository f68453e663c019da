//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `exp(j·theta)`.
#[inline]
pub fn expj(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `a x = b` for Hermitian positive-definite `a` via Cholesky.
/// Returns `None` when the factorization breaks down.
pub fn hermitian_solve(a: &CMatrix, b: &CVector) -> Option<CVector> {
    let chol = a.clone().cholesky()?;
    let x = chol.solve(b);
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(x)
}

/// Minimum-norm solution of `a x = b` for Hermitian PSD `a`, discarding
/// eigen-directions below `rel_tol · λ_max`.
pub fn hermitian_pinv_solve(a: &CMatrix, b: &CVector, rel_tol: f64) -> CVector {
    let eig = a.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = rel_tol * top;
    let proj = eig.eigenvectors.adjoint() * b;
    let mut scaled = proj;
    for (j, z) in scaled.iter_mut().enumerate() {
        let d = eig.eigenvalues[j];
        *z = if d > cutoff && d > 0.0 {
            *z / d
        } else {
            C64::new(0.0, 0.0)
        };
    }
    &eig.eigenvectors * scaled
}

/// `x^H a x`, real part (exact for Hermitian `a`).
pub fn quad_form(a: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(a * x)).re
}

pub fn is_finite(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
