use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::linalg::{norm_max, solve_psd, spectral_radius, symmetrize};

/// Convergence tolerance on successive value-matrix iterates, relative.
pub const DARE_TOLERANCE: f64 = 1e-12;
/// Acceptance bound on the Riccati residual, relative to `|S|`.
pub const DARE_RESIDUAL_BOUND: f64 = 1e-10;
pub const DARE_ITERATION_CAP: usize = 1_000_000;

/// Stationary LQ solution: `u = K x + K_d Pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqSolution {
    pub s: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub kd: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl LqSolution {
    pub fn closed_loop(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a + b * &self.k
    }

    /// Plain-text dump of `S`, `K` and `K_d` for regression baselines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, m) in [("S", &self.s), ("K", &self.k), ("K_d", &self.kd)] {
            out.push_str(&format!("{name} {} {}\n", m.nrows(), m.ncols()));
            for row in m.row_iter() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

struct Problem<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DMatrix<f64>,
    q: &'a DMatrix<f64>,
    r: &'a DMatrix<f64>,
    n: DMatrix<f64>,
}

impl Problem<'_> {
    fn hessian(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = self.b.transpose() * s * self.b + self.r;
        symmetrize(&mut h);
        h
    }

    fn gain(&self, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let g = self.b.transpose() * s * self.a + self.n.transpose();
        Ok(-solve_psd(&self.hessian(s), &g)?)
    }

    /// One step of the Riccati recursion; returns the next iterate and the
    /// gain computed from `s`.
    fn map(&self, s: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let k = self.gain(s)?;
        let cross = self.a.transpose() * s * self.b + &self.n;
        let mut next = self.q + self.a.transpose() * s * self.a + cross * &k;
        symmetrize(&mut next);
        Ok((next, k))
    }

    fn residual(&self, s: &DMatrix<f64>) -> Result<f64> {
        let (next, _) = self.map(s)?;
        Ok(norm_max(&(next - s)))
    }

    /// Value matrix of the fixed policy `u = k x`, or `None` if the policy
    /// does not stabilize.
    fn policy_value(&self, k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let closed = self.a + self.b * k;
        let mut stage = self.q + k.transpose() * self.r * k + &self.n * k + k.transpose() * self.n.transpose();
        symmetrize(&mut stage);
        stein_doubling(&closed, &stage)
    }
}

/// Solves `S = F' S F + M` by repeated squaring of `F`.
fn stein_doubling(f: &DMatrix<f64>, m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut s = m.clone();
    let mut p = f.clone();
    for _ in 0..80 {
        let inc = p.transpose() * &s * &p;
        let size = norm_max(&inc);
        if !size.is_finite() || norm_max(&p) > 1e100 {
            return None;
        }
        s += inc;
        if size <= 1e-17 * norm_max(&s).max(f64::MIN_POSITIVE) && norm_max(&p) < 1.0 {
            symmetrize(&mut s);
            return Some(s);
        }
        p = &p * &p;
    }
    None
}

/// Discrete algebraic Riccati equation
/// `S = A'SA - A'SB (B'SB + R)^-1 B'SA + Q`.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    Ok(lq_solution(a, b, q, r, None)?.s)
}

/// Stationary LQ gains for stage cost `x'Qx + u'Ru + 2x'Nu`.
///
/// The Riccati recursion is iterated from `S = Q`; once the running gain
/// stabilizes the loop, Newton steps on the policy value (each a Stein
/// equation solved by doubling) finish the solve.
pub fn lq_solution(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    cross: Option<&DMatrix<f64>>,
) -> Result<LqSolution> {
    let nx = a.nrows();
    let nu = b.ncols();
    if a.ncols() != nx || b.nrows() != nx || q.shape() != (nx, nx) || r.shape() != (nu, nu) {
        return Err(Error::Dimension(format!(
            "A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let n = match cross {
        Some(n) if n.shape() != (nx, nu) => {
            return Err(Error::Dimension(format!("N {:?}, expected ({nx}, {nu})", n.shape())))
        }
        Some(n) => n.clone(),
        None => DMatrix::zeros(nx, nu),
    };
    let problem = Problem { a, b, q, r, n };
    let mut s = q.clone();
    symmetrize(&mut s);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < DARE_ITERATION_CAP {
        iterations += 1;
        let (next, k) = problem.map(&s)?;
        let step = norm_max(&(&next - &s));
        s = next;
        if step <= DARE_TOLERANCE * norm_max(&s).max(1.0) {
            converged = true;
            break;
        }
        if iterations % 16 == 0 && (iterations.is_power_of_two() || iterations % 1024 == 0) {
            if let Some(refined) = newton(&problem, k) {
                s = refined;
                converged = true;
                break;
            }
        }
    }
    let residual = problem.residual(&s)?;
    if !converged || residual > DARE_RESIDUAL_BOUND * norm_max(&s).max(1.0) {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    let k = problem.gain(&s)?;
    let kd = -solve_psd(&problem.hessian(&s), &b.transpose())?;
    Ok(LqSolution {
        s,
        k,
        kd,
        residual,
        iterations,
    })
}

/// Policy iteration from `k`. Stops once the step no longer shrinks and
/// accepts the result on its Riccati residual.
fn newton(problem: &Problem<'_>, mut k: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut s = problem.policy_value(&k)?;
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        k = problem.gain(&s).ok()?;
        let next = problem.policy_value(&k)?;
        let step = norm_max(&(&next - &s));
        s = next;
        let scale = norm_max(&s).max(1.0);
        if step <= 1e-14 * scale || (step >= last && step <= 1e-9 * scale) {
            break;
        }
        last = step;
    }
    let residual = problem.residual(&s).ok()?;
    (residual <= DARE_RESIDUAL_BOUND * norm_max(&s).max(1.0)).then_some(s)
}

/// Largest eigenvalue modulus of `A + BK`.
pub fn closed_loop_radius(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>) -> f64 {
    spectral_radius(&(a + b * k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn deadbeat_scalar() {
        let sol = lq_solution(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(0.0), None).unwrap();
        assert!((sol.s[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((sol.k[(0, 0)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_ratio_scalar() {
        let sol = lq_solution(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0), None).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sol.s[(0, 0)] - phi).abs() < 1e-12);
        assert!((sol.k[(0, 0)] + phi / (phi + 1.0)).abs() < 1e-12);
        assert!((sol.k[(0, 0)] + 0.6180).abs() < 1e-4);
    }

    #[test]
    fn unstable_open_loop_is_stabilized() {
        let a = DMatrix::from_row_slice(2, 2, &[1.2, 1.0, 0.0, 1.1]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = scalar(0.5);
        let sol = lq_solution(&a, &b, &q, &r, None).unwrap();
        assert!(closed_loop_radius(&a, &b, &sol.k) < 1.0);
        assert!(sol.residual <= 1e-10 * norm_max(&sol.s));
        assert_eq!(sol.s, sol.s.transpose());
    }

    #[test]
    fn cross_term_matches_completed_square() {
        // Stage cost (x - u)^2 + u^2 written with a cross term equals
        // x^2 - 2xu + 2u^2.
        let a = scalar(0.9);
        let b = scalar(1.0);
        let with_cross = lq_solution(&a, &b, &scalar(1.0), &scalar(2.0), Some(&scalar(-1.0))).unwrap();
        // Brute force: iterate the scalar Riccati map by hand.
        let mut s: f64 = 1.0;
        for _ in 0..10_000 {
            let h = s + 2.0;
            let g = 0.9 * s - 1.0;
            s = 1.0 + 0.81 * s - g * g / h;
        }
        assert!((with_cross.s[(0, 0)] - s).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::zeros(3, 1);
        assert!(matches!(
            lq_solution(&a, &b, &a, &scalar(1.0), None),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn text_dump_lists_all_three_matrices() {
        let sol = lq_solution(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0), None).unwrap();
        let text = sol.to_text();
        assert!(text.starts_with("S 1 1\n"));
        assert!(text.contains("\nK 1 1\n") && text.contains("\nK_d 1 1\n"));
    }
}
