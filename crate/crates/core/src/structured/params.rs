use std::fmt;

use crate::error::{invalid, Result};

/// Output of the offline parameter sweep.
///
/// Index `i` holds gate `i + 1`. `q_tilde` and `gamma` are in scaled
/// variables; `q` keeps the raw weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    pub q: Vec<f64>,
    pub q_tilde: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub gamma: Vec<f64>,
    pub r: f64,
    pub r_tilde: f64,
    pub x: f64,
    pub g: f64,
}

/// Offline sweep from the most downstream gate to the reservoir.
pub fn compute_params(q: &[f64], r: f64, b: &[f64], c: &[f64]) -> Result<ControlParams> {
    let n = q.len();
    if n == 0 || b.len() != n || c.len() != n {
        return Err(invalid(
            "q/b/c",
            format!("need equal nonzero lengths, got {}, {}, {}", q.len(), b.len(), c.len()),
        ));
    }
    for (name, vals) in [("q", q), ("b", b), ("c", c)] {
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid(name, "must be positive and finite"));
        }
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid("r", "must be positive and finite"));
    }
    let mut b_hat = vec![b[0]];
    let mut q_tilde = vec![q[0]];
    let mut gamma = vec![q[0]];
    for i in 1..n {
        let prev = b_hat[i - 1];
        b_hat.push(b[i] / c[i] * prev);
        let qt = c[i] * c[i] / (prev * prev) * q[i];
        q_tilde.push(qt);
        let g = gamma[i - 1];
        gamma.push(g * qt / (g + qt));
    }
    let gamma_n = gamma[n - 1];
    let r_tilde = r / (b_hat[n - 1] * b_hat[n - 1]);
    let x = -gamma_n / 2.0 + (gamma_n * r_tilde + gamma_n * gamma_n / 4.0).sqrt();
    let g = x / (x + gamma_n);
    Ok(ControlParams {
        q: q.to_vec(),
        q_tilde,
        b_hat,
        gamma,
        r,
        r_tilde,
        x,
        g,
    })
}

impl ControlParams {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

impl fmt::Display for ControlParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gate q q_tilde b_hat gamma")?;
        for i in 0..self.len() {
            writeln!(
                f,
                "{} {:.12e} {:.12e} {:.12e} {:.12e}",
                i + 1,
                self.q[i],
                self.q_tilde[i],
                self.b_hat[i],
                self.gamma[i]
            )?;
        }
        writeln!(f, "r {:.12e}", self.r)?;
        writeln!(f, "r_tilde {:.12e}", self.r_tilde)?;
        writeln!(f, "X {:.12e}", self.x)?;
        write!(f, "g {:.12e}", self.g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_unit_gates() {
        let p = compute_params(&[1.0; 3], 1.0, &[1.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(p.b_hat, vec![1.0; 3]);
        for (i, g) in p.gamma.iter().enumerate() {
            assert!((g - 1.0 / (i as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_square_root_case() {
        let p = compute_params(&[1.0], 2.0, &[1.0], &[1.0]).unwrap();
        assert_eq!(p.x, 1.0);
        assert_eq!(p.g, 0.5);
    }

    #[test]
    fn two_table_pools() {
        let p = compute_params(&[1.0, 1.0], 0.3, &[0.069, 0.0213], &[0.063, 0.0156]).unwrap();
        let expect = 0.0213 / 0.0156 * 0.069;
        assert!((p.b_hat[1] - expect).abs() < 1e-15);
        assert!((p.b_hat[1] - 0.094212).abs() < 1e-6);
    }

    #[test]
    fn nonpositive_inputs_rejected() {
        assert!(compute_params(&[1.0, 0.0], 1.0, &[1.0; 2], &[1.0; 2]).is_err());
        assert!(compute_params(&[1.0], 0.0, &[1.0], &[1.0]).is_err());
        assert!(compute_params(&[1.0], 1.0, &[-1.0], &[1.0]).is_err());
        assert!(compute_params(&[1.0], 1.0, &[1.0], &[f64::NAN]).is_err());
        assert!(compute_params(&[], 1.0, &[], &[]).is_err());
    }

    #[test]
    fn text_form_lists_every_gate() {
        let p = compute_params(&[1.0; 4], 0.3, &[0.5; 4], &[0.4; 4]).unwrap();
        let text = p.to_string();
        assert_eq!(text.lines().count(), 1 + 4 + 4);
        assert!(text.lines().any(|l| l.starts_with("g ")));
    }
}
