//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const COND_WARN: f64 = 1e12;
pub(crate) const COND_FAIL: f64 = 1e15;

/// Inverse of a symmetric positive-definite matrix via Cholesky, refusing
/// matrices whose 2-norm condition number exceeds [`COND_FAIL`].
pub(crate) fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Singular(format!("{what} is not square")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what} has non-finite entries")));
    }
    let sym = symmetrize(m);
    let eig = sym.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Singular(format!(
            "{what} is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    let cond = max / min;
    if cond > COND_FAIL {
        return Err(Error::Singular(format!("{what} has condition number {cond:e}")));
    }
    if cond > COND_WARN {
        log::warn!("{what} is ill-conditioned (condition number {cond:e})");
    }
    let chol = sym
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("{what}: Cholesky factorization failed")))?;
    Ok(symmetrize(&chol.inverse()))
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `vᵀ A v`.
pub(crate) fn quad_form(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(a * v))
}
