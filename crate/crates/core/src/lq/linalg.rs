use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) fn norm_max(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Solves `h x = rhs` for symmetric positive semi-definite `h`. Falls back
/// to the pseudo-inverse when `h` is singular, which yields the minimizer
/// of the corresponding quadratic whenever `rhs` lies in the range of `h`.
pub(crate) fn solve_psd(h: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = h.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    let scale = norm_max(h).max(f64::MIN_POSITIVE);
    let pinv = h
        .clone()
        .pseudo_inverse(1e-13 * scale)
        .map_err(|e| Error::Singular(e.to_string()))?;
    Ok(pinv * rhs)
}

pub(crate) fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

