#![allow(dead_code)]

use irrigation_lq::lq::{lifted_first_order_oracle, OracleHorizon};
use irrigation_lq::plant::{FirstOrderPoolParams, NetworkModel, Plant};
use irrigation_lq::structured::StructuredController;
use irrigation_lq::CostWeights;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small first-order string with announced off-takes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub pools: Vec<FirstOrderPoolParams>,
    pub q: Vec<f64>,
    pub r: f64,
    pub levels: Vec<f64>,
    /// Time-major off-take schedule `d[t][i]`, `t = 0..=H`.
    pub d: Vec<Vec<f64>>,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.gen_range(1..=4);
        let tau_bar = rng.gen_range(0..=2);
        let pools = (0..n)
            .map(|_| {
                FirstOrderPoolParams::new(
                    rng.gen_range(0.2..2.0),
                    rng.gen_range(0.2..2.0),
                    rng.gen_range(1..=3),
                    tau_bar,
                )
                .unwrap()
            })
            .collect();
        let q = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
        let r = rng.gen_range(0.05..3.0);
        let levels = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let horizon = rng.gen_range(0..=20);
        let d = (0..=horizon)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.gen_bool(0.3) { rng.gen_range(-1.0..1.0) } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            pools,
            q,
            r,
            levels,
            d,
        }
    }

    pub fn n(&self) -> usize {
        self.pools.len()
    }

    pub fn weights(&self) -> CostWeights {
        let mut w = CostWeights::reservoir_only(self.n(), 1.0, self.r);
        w.q = self.q.clone();
        w
    }

    pub fn r_vector(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n()];
        r[self.n() - 1] = self.r;
        r
    }

    /// Schedule of gate `i` (0-based) as announcement entries.
    pub fn schedule(&self, i: usize) -> Vec<(i64, f64)> {
        self.d
            .iter()
            .enumerate()
            .filter(|(_, dt)| dt[i] != 0.0)
            .map(|(t, dt)| (t as i64, dt[i]))
            .collect()
    }

    pub fn offtake(&self, t: usize) -> Vec<f64> {
        self.d.get(t).cloned().unwrap_or_else(|| vec![0.0; self.n()])
    }
}

/// Closed loop of the structured controller on the exact first-order plant,
/// all off-takes announced at `t = 0`.
pub fn run_structured(inst: &Instance, steps: usize) -> Vec<Vec<f64>> {
    let mut ctrl = StructuredController::new(&inst.pools, &inst.weights()).unwrap();
    for i in 0..inst.n() {
        ctrl.announce_disturbance(i + 1, inst.schedule(i)).unwrap();
    }
    let mut plant = Plant::new(NetworkModel::from_first_order(inst.pools.clone()).unwrap(), &inst.levels).unwrap();
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let u = ctrl.tick(&plant.levels()).unwrap();
        plant.step(&u, &inst.offtake(t)).unwrap();
        out.push(u);
    }
    out
}

pub fn run_oracle(inst: &Instance, steps: usize) -> Vec<Vec<f64>> {
    lifted_first_order_oracle(&inst.pools, &inst.q, &inst.r_vector(), &inst.levels, &inst.d, steps, OracleHorizon::Infinite)
        .unwrap()
}

/// `max |a - b| / max |b|` over whole trajectories.
pub fn relative_error(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let diff = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale
}

/// Random `(A, B, Q, R)` with `Q`, `R` positive definite.
pub fn random_system(rng: &mut ChaCha8Rng, nx: usize, nu: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_fn(nx, nx, |_, _| rng.gen_range(-0.8..0.8));
    let b = DMatrix::from_fn(nx, nu, |_, _| rng.gen_range(-1.0..1.0));
    let mq = DMatrix::from_fn(nx, nx, |_, _| rng.gen_range(-1.0..1.0));
    let mr = DMatrix::from_fn(nu, nu, |_, _| rng.gen_range(-1.0..1.0));
    let q = &mq * mq.transpose() + DMatrix::identity(nx, nx) * 0.1;
    let r = &mr * mr.transpose() + DMatrix::identity(nu, nu) * 0.1;
    (a, b, q, r)
}

/// Cost `sum_{t<T} (x'Qx + u'Ru) + x_T' P x_T` of `u` from `x0` with
/// injections `v`.
pub fn trajectory_cost(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    terminal: &DMatrix<f64>,
    x0: &DVector<f64>,
    u: &[DVector<f64>],
    v: &[DVector<f64>],
) -> f64 {
    let mut x = x0.clone();
    let mut cost = 0.0;
    for (t, ut) in u.iter().enumerate() {
        cost += x.dot(&(q * &x)) + ut.dot(&(r * ut));
        x = a * &x + b * ut + &v[t];
    }
    cost + x.dot(&(terminal * &x))
}

/// Minimizer of [`trajectory_cost`] over stacked inputs, by the normal
/// equations of the quadratic in `U = (u_0, ..., u_{T-1})`.
pub fn brute_force_qp(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    terminal: &DMatrix<f64>,
    x0: &DVector<f64>,
    v: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let (nx, nu, len) = (a.nrows(), b.ncols(), v.len());
    // x_t = free_t + sum_{k<t} G_{t,k} u_k
    let mut free = vec![x0.clone()];
    for t in 0..len {
        let next = a * &free[t] + &v[t];
        free.push(next);
    }
    let mut g = vec![vec![DMatrix::zeros(nx, nu); len]; len + 1];
    for t in 1..=len {
        for k in 0..t {
            g[t][k] = if k == t - 1 { b.clone() } else { a * &g[t - 1][k] };
        }
    }
    let dim = nu * len;
    let mut h = DMatrix::zeros(dim, dim);
    let mut f = DVector::zeros(dim);
    for t in 0..len {
        h.view_mut((t * nu, t * nu), (nu, nu)).add_assign(r);
    }
    for t in 1..=len {
        let weight = if t == len { terminal } else { q };
        for k in 0..t {
            let gk = weight * &g[t][k];
            let fk = g[t][k].transpose() * weight * &free[t];
            let mut rows = f.rows_mut(k * nu, nu);
            rows += fk;
            for j in 0..t {
                let block = g[t][j].transpose() * &gk;
                let mut view = h.view_mut((j * nu, k * nu), (nu, nu));
                view += block;
            }
        }
    }
    let sol = h.cholesky().expect("positive definite Hessian").solve(&(-f));
    (0..len).map(|t| sol.rows(t * nu, nu).into_owned()).collect()
}

trait AddAssignView {
    fn add_assign(&mut self, m: &DMatrix<f64>);
}

impl AddAssignView for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(&mut self, m: &DMatrix<f64>) {
        *self += m;
    }
}
