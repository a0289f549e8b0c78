use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::plant::FirstOrderPoolParams;

use super::dare::lq_solution;
use super::feedforward::feedforward_pi;
use super::linalg::solve_psd;

/// Dense problems beyond this many lifted states are refused.
pub const ORACLE_MAX_STATES: usize = 1500;
pub const ORACLE_MAX_STEPS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleHorizon {
    /// Stationary gains with feed-forward over the disturbance support.
    Infinite,
    /// Minimize the cost over `[0, T)` plus the terminal level penalty.
    Finite(usize),
}

/// First-order network with every delay held in shift registers.
///
/// State layout: levels `y_1..y_N`, then for each pool the register
/// `u_i[t-1], ..., u_i[t-tau_i-tau_bar]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pools: Vec<FirstOrderPoolParams>,
}

impl LiftedModel {
    pub fn new(pools: &[FirstOrderPoolParams], q: &[f64], r: &[f64]) -> Result<Self> {
        let n = pools.len();
        if n == 0 || q.len() != n || r.len() != n {
            return Err(Error::Dimension(format!(
                "{n} pools with {} level and {} flow weights",
                q.len(),
                r.len()
            )));
        }
        let tau_bar = pools[0].tau_bar;
        if pools.iter().any(|p| p.tau_bar != tau_bar) {
            return Err(Error::Config("pools must share tau_bar".into()));
        }
        let mut offsets = Vec::with_capacity(n);
        let mut nx = n;
        for p in pools {
            offsets.push(nx);
            nx += p.tau + p.tau_bar;
        }
        if nx > ORACLE_MAX_STATES {
            return Err(Error::TooLarge(format!(
                "{nx} lifted states exceed the dense limit {ORACLE_MAX_STATES}"
            )));
        }
        let mut a = DMatrix::zeros(nx, nx);
        let mut b = DMatrix::zeros(nx, n);
        // Register index of u_i[t - lag]; lag 0 is the current input.
        let reg = |i: usize, lag: usize| offsets[i] + lag - 1;
        for (i, p) in pools.iter().enumerate() {
            a[(i, i)] = 1.0;
            let len = p.tau + p.tau_bar;
            if len == 0 {
                b[(i, i)] += p.b;
            } else {
                a[(i, reg(i, len))] += p.b;
                b[(reg(i, 1), i)] = 1.0;
                for lag in 2..=len {
                    a[(reg(i, lag), reg(i, lag - 1))] = 1.0;
                }
            }
            if i > 0 {
                if tau_bar == 0 {
                    b[(i, i - 1)] -= p.c;
                } else {
                    a[(i, reg(i - 1, tau_bar))] -= p.c;
                }
            }
        }
        let mut qm = DMatrix::zeros(nx, nx);
        for (i, &w) in q.iter().enumerate() {
            qm[(i, i)] = w;
        }
        let rm = DMatrix::from_diagonal(&DVector::from_column_slice(r));
        Ok(Self {
            a,
            b,
            q: qm,
            r: rm,
            pools: pools.to_vec(),
        })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn initial_state(&self, levels: &[f64]) -> Result<DVector<f64>> {
        if levels.len() != self.pools.len() {
            return Err(Error::Dimension(format!("{} initial levels", levels.len())));
        }
        let mut x = DVector::zeros(self.n_states());
        x.rows_mut(0, levels.len()).copy_from_slice(levels);
        Ok(x)
    }

    /// `v[t]`: off-take `d_i[t - tau_bar]` acting on level `i` with gain `c_i`.
    /// `d` is time-major; missing entries are zero.
    pub fn injections(&self, d: &[Vec<f64>], len: usize) -> Vec<DVector<f64>> {
        let tau_bar = self.pools[0].tau_bar;
        (0..len)
            .map(|t| {
                let mut v = DVector::zeros(self.n_states());
                if t >= tau_bar {
                    if let Some(dt) = d.get(t - tau_bar) {
                        for (i, p) in self.pools.iter().enumerate() {
                            v[i] = p.c * dt.get(i).copied().unwrap_or(0.0);
                        }
                    }
                }
                v
            })
            .collect()
    }
}

/// Optimal inputs of the lifted first-order problem with known off-takes,
/// zero initial flow histories and initial `levels`. Returns `steps` input
/// vectors (time-major).
pub fn lifted_first_order_oracle(
    pools: &[FirstOrderPoolParams],
    q: &[f64],
    r: &[f64],
    levels: &[f64],
    d: &[Vec<f64>],
    steps: usize,
    horizon: OracleHorizon,
) -> Result<Vec<Vec<f64>>> {
    if steps > ORACLE_MAX_STEPS {
        return Err(Error::TooLarge(format!("{steps} steps exceed {ORACLE_MAX_STEPS}")));
    }
    let model = LiftedModel::new(pools, q, r)?;
    let x0 = model.initial_state(levels)?;
    match horizon {
        OracleHorizon::Infinite => infinite(&model, x0, d, steps),
        OracleHorizon::Finite(len) => {
            if len > ORACLE_MAX_STEPS {
                return Err(Error::TooLarge(format!("horizon {len} exceeds {ORACLE_MAX_STEPS}")));
            }
            finite(&model, x0, d, steps.min(len), len)
        }
    }
}

fn infinite(
    model: &LiftedModel,
    mut x: DVector<f64>,
    d: &[Vec<f64>],
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let sol = lq_solution(&model.a, &model.b, &model.q, &model.r, None)?;
    let support = d.len() + model.pools[0].tau_bar;
    let v = model.injections(d, support.max(steps));
    let horizon = v.len().saturating_sub(1);
    let pi = feedforward_pi(&sol.closed_loop(&model.a, &model.b), &sol.s, &v, horizon)?;
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let u = &sol.k * &x + &sol.kd * &pi[t];
        x = &model.a * &x + &model.b * &u + &v[t];
        out.push(u.iter().copied().collect());
    }
    Ok(out)
}

fn finite(
    model: &LiftedModel,
    mut x: DVector<f64>,
    d: &[Vec<f64>],
    steps: usize,
    len: usize,
) -> Result<Vec<Vec<f64>>> {
    let v = model.injections(d, len);
    let (a, b) = (&model.a, &model.b);
    let mut s = model.q.clone();
    let mut lambda = DVector::zeros(model.n_states());
    let mut gains = Vec::with_capacity(len);
    for t in (0..len).rev() {
        let h = b.transpose() * &s * b + &model.r;
        let k = -solve_psd(&h, &(b.transpose() * &s * a))?;
        let drive = &s * &v[t] + &lambda;
        let rhs = b.transpose() * &drive;
        let kf = -solve_psd(&h, &DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
        let closed = a + b * &k;
        lambda = closed.transpose() * drive;
        s = &model.q + a.transpose() * &s * a + a.transpose() * &s * b * &k;
        s = (&s + s.transpose()) * 0.5;
        gains.push((k, kf));
    }
    gains.reverse();
    let mut out = Vec::with_capacity(steps);
    for (t, (k, kf)) in gains.iter().enumerate().take(steps) {
        let u = k * &x + kf.column(0);
        x = a * &x + b * &u + &v[t];
        out.push(u.iter().copied().collect());
    }
    Ok(out)
}
