use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Backward recursion `Pi[t] = (A + BK)' Pi[t+1] + S v[t]` from
/// `Pi[H+1] = 0`. `v[t]` for `t >= v.len()` is zero; entries past `H` are
/// rejected. Returns `Pi[0..=H+1]`.
pub fn feedforward_pi(
    closed_loop: &DMatrix<f64>,
    s: &DMatrix<f64>,
    v: &[DVector<f64>],
    horizon: usize,
) -> Result<Vec<DVector<f64>>> {
    let nx = s.nrows();
    if closed_loop.shape() != (nx, nx) {
        return Err(Error::Dimension(format!(
            "closed loop {:?} vs S {:?}",
            closed_loop.shape(),
            s.shape()
        )));
    }
    if let Some(bad) = v.iter().position(|vt| vt.len() != nx) {
        return Err(Error::Dimension(format!("v[{bad}] has length {}", v[bad].len())));
    }
    if let Some(last) = v.iter().rposition(|vt| vt.iter().any(|&x| x != 0.0)) {
        if last > horizon {
            return Err(Error::BeyondHorizon {
                time: last as i64,
                limit: horizon as i64,
            });
        }
    }
    let transposed = closed_loop.transpose();
    let mut pi = vec![DVector::zeros(nx); horizon + 2];
    for t in (0..=horizon).rev() {
        let mut next = &transposed * &pi[t + 1];
        if let Some(vt) = v.get(t) {
            next += s * vt;
        }
        pi[t] = next;
    }
    Ok(pi)
}
