mod common;

use common::{brute_force_qp, random_system, rng, trajectory_cost};
use irrigation_lq::lq::{closed_loop_radius, feedforward_pi, lq_solution, solve_dare};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

struct Case {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    x0: DVector<f64>,
    v: Vec<DVector<f64>>,
}

fn random_case(seed: u64, max_states: usize, max_horizon: usize) -> Case {
    let mut r = rng(seed);
    let nx = r.gen_range(1..=max_states);
    let nu = r.gen_range(1..=nx.min(3));
    let (a, b, q, rw) = random_system(&mut r, nx, nu);
    let x0 = DVector::from_fn(nx, |_, _| r.gen_range(-2.0..2.0));
    let len = r.gen_range(1..=max_horizon);
    let v = (0..len).map(|_| DVector::from_fn(nx, |_, _| r.gen_range(-1.0..1.0))).collect();
    Case { a, b, q, r: rw, x0, v }
}

/// Inputs `u = Kx + K_d Pi` over the disturbance window.
fn feedforward_inputs(c: &Case) -> (Vec<DVector<f64>>, DMatrix<f64>) {
    let sol = lq_solution(&c.a, &c.b, &c.q, &c.r, None).unwrap();
    let horizon = c.v.len() - 1;
    let pi = feedforward_pi(&sol.closed_loop(&c.a, &c.b), &sol.s, &c.v, horizon).unwrap();
    let mut x = c.x0.clone();
    let mut u = Vec::new();
    for t in 0..c.v.len() {
        let ut = &sol.k * &x + &sol.kd * &pi[t];
        x = &c.a * &x + &c.b * &ut + &c.v[t];
        u.push(ut);
    }
    (u, sol.s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feedforward_attains_qp_minimum(seed in any::<u64>()) {
        let c = random_case(seed, 8, 15);
        let (u, s) = feedforward_inputs(&c);
        let closed = trajectory_cost(&c.a, &c.b, &c.q, &c.r, &s, &c.x0, &u, &c.v);
        let best = brute_force_qp(&c.a, &c.b, &c.q, &c.r, &s, &c.x0, &c.v);
        let qp = trajectory_cost(&c.a, &c.b, &c.q, &c.r, &s, &c.x0, &best, &c.v);
        prop_assert!((closed - qp).abs() <= 1e-8 * qp.abs().max(1e-12), "{closed} vs {qp}");
    }

    #[test]
    fn perturbations_never_help(seed in any::<u64>()) {
        let c = random_case(seed, 6, 10);
        let (u, s) = feedforward_inputs(&c);
        let base = trajectory_cost(&c.a, &c.b, &c.q, &c.r, &s, &c.x0, &u, &c.v);
        let mut r = rng(seed ^ 0x5eed);
        for _ in 0..100 {
            let scale = 10f64.powf(r.gen_range(-4.0..0.0));
            let other: Vec<_> = u.iter().map(|ut| ut + DVector::from_fn(ut.len(), |_, _| scale * r.gen_range(-1.0..1.0))).collect();
            let cost = trajectory_cost(&c.a, &c.b, &c.q, &c.r, &s, &c.x0, &other, &c.v);
            prop_assert!(cost >= base - 1e-12 * base.abs().max(1.0), "{cost} < {base}");
        }
    }

    #[test]
    fn adjoint_is_linear_in_injections(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let c = random_case(seed, 6, 12);
        let other = random_case(seed.wrapping_add(1), 6, 12);
        let nx = c.a.nrows();
        let w: Vec<DVector<f64>> = (0..c.v.len()).map(|t| {
            other.v.get(t).filter(|x| x.len() == nx).cloned().unwrap_or_else(|| DVector::from_element(nx, 0.25))
        }).collect();
        let sol = lq_solution(&c.a, &c.b, &c.q, &c.r, None).unwrap();
        let f = sol.closed_loop(&c.a, &c.b);
        let h = c.v.len() - 1;
        let pv = feedforward_pi(&f, &sol.s, &c.v, h).unwrap();
        let pw = feedforward_pi(&f, &sol.s, &w, h).unwrap();
        let mix: Vec<_> = c.v.iter().zip(&w).map(|(a, b)| a * alpha + b * beta).collect();
        let pm = feedforward_pi(&f, &sol.s, &mix, h).unwrap();
        for t in 0..=h + 1 {
            let expect = &pv[t] * alpha + &pw[t] * beta;
            prop_assert!((&pm[t] - &expect).amax() <= 1e-9 * expect.amax().max(1.0));
        }
    }

    #[test]
    fn random_dare_is_stabilizing(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut a = DMatrix::from_fn(6, 6, |_, _| r.gen_range(-1.0..1.0));
        a *= 1.3 / closed_loop_radius(&a, &DMatrix::zeros(6, 1), &DMatrix::zeros(1, 6)).max(1e-3);
        let b = DMatrix::from_fn(6, 2, |_, _| r.gen_range(-1.0..1.0));
        let q = DMatrix::identity(6, 6);
        let rw = DMatrix::identity(2, 2) * r.gen_range(0.01..10.0);
        let sol = lq_solution(&a, &b, &q, &rw, None).unwrap();
        prop_assert!(closed_loop_radius(&a, &b, &sol.k) < 1.0);
        prop_assert!(sol.residual <= 1e-10 * sol.s.amax());
        prop_assert_eq!(&sol.s, &sol.s.transpose());
        prop_assert!(sol.s.clone().cholesky().is_some());
    }
}

#[test]
fn scalar_feedforward_by_hand() {
    let (a, b, q, r) = (DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0));
    let s = solve_dare(&a, &b, &q, &r).unwrap();
    let sol = lq_solution(&a, &b, &q, &r, None).unwrap();
    let pi = feedforward_pi(&sol.closed_loop(&a, &b), &s, &[DVector::from_element(1, 1.0)], 0).unwrap();
    assert_eq!(pi[0][0], s[(0, 0)]);
    let x0 = 0.4;
    let u = sol.k[(0, 0)] * x0 + sol.kd[(0, 0)] * pi[0][0];
    let sv = s[(0, 0)];
    let expect = sol.k[(0, 0)] * x0 - sv / (sv + 1.0);
    assert!((u - expect).abs() < 1e-15);
}

#[test]
fn no_injection_is_pure_feedback() {
    let c = random_case(3, 5, 8);
    let sol = lq_solution(&c.a, &c.b, &c.q, &c.r, None).unwrap();
    let zeros = vec![DVector::zeros(c.a.nrows()); 8];
    let pi = feedforward_pi(&sol.closed_loop(&c.a, &c.b), &sol.s, &zeros, 7).unwrap();
    assert!(pi.iter().all(|p| p.amax() == 0.0));
}
