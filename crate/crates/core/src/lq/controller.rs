use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::plant::{NetworkModel, Plant};
use crate::weights::CostWeights;

use super::dare::{lq_solution, LqSolution};
use super::feedforward::feedforward_pi;
use super::state_space::{assemble_state_space, QuadraticCost, StateSpaceModel};

/// Centralized third-order LQ controller with full state access and a
/// known off-take schedule.
#[derive(Debug, Clone)]
pub struct CentralLq {
    model: StateSpaceModel,
    cost: QuadraticCost,
    solution: LqSolution,
    pi: Vec<DVector<f64>>,
}

impl CentralLq {
    pub fn new(network: &NetworkModel, include_delta_u: bool, weights: &CostWeights) -> Result<Self> {
        let (model, cost) = assemble_state_space(network, include_delta_u, weights)?;
        let solution = lq_solution(&model.a, &model.b, &cost.q, &cost.r, Some(&cost.n))?;
        let nx = model.n_states();
        Ok(Self {
            model,
            cost,
            solution,
            pi: vec![DVector::zeros(nx)],
        })
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }

    pub fn cost(&self) -> &QuadraticCost {
        &self.cost
    }

    pub fn solution(&self) -> &LqSolution {
        &self.solution
    }

    /// Installs the off-take schedule `d[t][i]` for `t = 0..d.len()`; the
    /// horizon is the last sample of the schedule.
    pub fn set_disturbance(&mut self, d: &[Vec<f64>]) -> Result<()> {
        let n = self.model.n_inputs();
        let mut v = Vec::with_capacity(d.len());
        for (t, dt) in d.iter().enumerate() {
            if dt.len() != n {
                return Err(Error::Dimension(format!("d[{t}] has {} entries for {n} pools", dt.len())));
            }
            v.push(self.model.injection(&DVector::from_column_slice(dt)));
        }
        let horizon = v.len().saturating_sub(1);
        let closed = self.solution.closed_loop(&self.model.a, &self.model.b);
        self.pi = feedforward_pi(&closed, &self.solution.s, &v, horizon)?;
        Ok(())
    }

    /// `u[t] = K x[t] + K_d Pi[t]`; `Pi` is zero past the horizon.
    pub fn control(&self, t: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut u = &self.solution.k * x;
        if let Some(pi) = self.pi.get(t) {
            u += &self.solution.kd * pi;
        }
        u
    }

    pub fn control_plant(&self, t: usize, plant: &Plant) -> Result<Vec<f64>> {
        let x = self.model.state_from_plant(plant)?;
        Ok(self.control(t, &x).iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lq::dare::closed_loop_radius;
    use crate::plant::{NetworkKind, ParamTable};

    fn network(n: usize) -> NetworkModel {
        NetworkModel::third_order(&ParamTable::default(), n, NetworkKind::Alternating).unwrap()
    }

    #[test]
    fn stabilizes_alternating_string() {
        let lq = CentralLq::new(&network(3), false, &CostWeights::reservoir_only(3, 1.0, 0.3)).unwrap();
        let sol = lq.solution();
        assert!(closed_loop_radius(&lq.model().a, &lq.model().b, &sol.k) < 1.0);
    }

    fn run(lq: &CentralLq, net: NetworkModel, steps: usize, d: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = net.len();
        let mut plant = Plant::new(net, &vec![1.0; n]).unwrap();
        let mut out = Vec::new();
        for t in 0..steps {
            let u = lq.control_plant(t, &plant).unwrap();
            let dt = d.get(t).cloned().unwrap_or(vec![0.0; n]);
            plant.step(&u, &dt).unwrap();
            out.push(u);
        }
        out
    }

    #[test]
    fn zero_rho_augmentation_changes_nothing() {
        let w = CostWeights::reservoir_only(2, 1.0, 0.3);
        let d = vec![vec![0.0, -0.5]; 40];
        let mut plain = CentralLq::new(&network(2), false, &w).unwrap();
        let mut aug = CentralLq::new(&network(2), true, &w).unwrap();
        plain.set_disturbance(&d).unwrap();
        aug.set_disturbance(&d).unwrap();
        let a = run(&plain, network(2), 200, &d);
        let b = run(&aug, network(2), 200, &d);
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
        }
    }

    #[test]
    fn levels_return_to_zero() {
        let net = network(2);
        let lq = CentralLq::new(&net, false, &CostWeights::reservoir_only(2, 1.0, 0.3)).unwrap();
        let mut plant = Plant::new(net, &[1.0, -1.0]).unwrap();
        for t in 0..3000 {
            let u = lq.control_plant(t, &plant).unwrap();
            plant.step(&u, &[0.0, 0.0]).unwrap();
        }
        assert!(plant.levels().iter().all(|y| y.abs() < 1e-6));
    }
}
