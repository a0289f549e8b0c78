use serde::Deserialize;

use crate::error::{invalid, Error, Result};

use super::params::{DesignDelays, FirstOrderPoolParams, ParamTable, PoolModel, ThirdOrderPoolParams};
use super::state::{step_first_order, step_third_order, PoolSimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    /// Every pool uses model one.
    Homogeneous,
    /// Odd pools (1, 3, ...) use model one, even pools model two.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelOrder {
    First,
    Third,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoolParams {
    First(FirstOrderPoolParams),
    Third(ThirdOrderPoolParams),
}

/// Pool models for a network of `n` pools, index 0 being pool 1 (most
/// downstream) and the last entry the pool fed by the reservoir.
pub fn pool_models(n: usize, kind: NetworkKind) -> Result<Vec<PoolModel>> {
    if n == 0 {
        return Err(invalid("n", "a network needs at least one pool"));
    }
    Ok((1..=n)
        .map(|i| match kind {
            NetworkKind::Homogeneous => PoolModel::One,
            NetworkKind::Alternating if i % 2 == 1 => PoolModel::One,
            NetworkKind::Alternating => PoolModel::Two,
        })
        .collect())
}

/// A string of pools fed by a reservoir at pool `n`. The flow over the most
/// downstream gate is held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub kind: NetworkKind,
    pub models: Vec<PoolModel>,
    pub pools: Vec<PoolParams>,
}

impl NetworkModel {
    pub fn third_order(table: &ParamTable, n: usize, kind: NetworkKind) -> Result<Self> {
        let models = pool_models(n, kind)?;
        let pools = models
            .iter()
            .map(|&m| table.third_order(m).map(PoolParams::Third))
            .collect::<Result<_>>()?;
        Ok(Self { kind, models, pools })
    }

    pub fn first_order(
        table: &ParamTable,
        n: usize,
        kind: NetworkKind,
        delays: &DesignDelays,
    ) -> Result<Self> {
        let models = pool_models(n, kind)?;
        let pools = models
            .iter()
            .map(|&m| table.design(m, delays).map(PoolParams::First))
            .collect::<Result<_>>()?;
        Ok(Self { kind, models, pools })
    }

    /// Network from explicit first-order pools.
    pub fn from_first_order(pools: Vec<FirstOrderPoolParams>) -> Result<Self> {
        if pools.is_empty() {
            return Err(invalid("pools", "a network needs at least one pool"));
        }
        let tau_bar = pools[0].tau_bar;
        if pools.iter().any(|p| p.tau_bar != tau_bar) {
            return Err(invalid("tau_bar", "must be shared by every pool"));
        }
        for p in &pools {
            p.validate()?;
        }
        Ok(Self {
            kind: NetworkKind::Homogeneous,
            models: vec![PoolModel::One; pools.len()],
            pools: pools.into_iter().map(PoolParams::First).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn first_order_pools(&self) -> Result<Vec<FirstOrderPoolParams>> {
        self.pools
            .iter()
            .map(|p| match p {
                PoolParams::First(f) => Ok(*f),
                PoolParams::Third(_) => Err(Error::Config("expected a first-order network".into())),
            })
            .collect()
    }

    pub fn third_order_pools(&self) -> Result<Vec<ThirdOrderPoolParams>> {
        self.pools
            .iter()
            .map(|p| match p {
                PoolParams::Third(t) => Ok(*t),
                PoolParams::First(_) => Err(Error::Config("expected a third-order network".into())),
            })
            .collect()
    }
}

/// Builds a network from the bundled table and default synthesis delays.
pub fn build_network(n: usize, kind: NetworkKind, order: ModelOrder) -> Result<NetworkModel> {
    let table = ParamTable::default();
    match order {
        ModelOrder::Third => NetworkModel::third_order(&table, n, kind),
        ModelOrder::First => NetworkModel::first_order(&table, n, kind, &DesignDelays::default()),
    }
}

/// Simulated network: one [`PoolSimState`] per pool.
#[derive(Debug, Clone)]
pub struct Plant {
    network: NetworkModel,
    states: Vec<PoolSimState>,
}

impl Plant {
    pub fn new(network: NetworkModel, initial_levels: &[f64]) -> Result<Self> {
        if initial_levels.len() != network.len() {
            return Err(Error::Dimension(format!(
                "{} initial levels for {} pools",
                initial_levels.len(),
                network.len()
            )));
        }
        let states = network
            .pools
            .iter()
            .zip(initial_levels)
            .map(|(p, &y)| match p {
                PoolParams::First(f) => PoolSimState::for_first_order(f, y),
                PoolParams::Third(t) => PoolSimState::for_third_order(t, y),
            })
            .collect();
        Ok(Self { network, states })
    }

    pub fn network(&self) -> &NetworkModel {
        &self.network
    }

    pub fn states(&self) -> &[PoolSimState] {
        &self.states
    }

    pub fn levels(&self) -> Vec<f64> {
        self.states.iter().map(PoolSimState::y).collect()
    }

    /// Applies flows `u[i]` (inflow of pool `i + 1`) and off-takes `d[i]`
    /// for one sample. Pool 1's outflow is the fixed zero flow.
    pub fn step(&mut self, u: &[f64], d: &[f64]) -> Result<()> {
        let n = self.network.len();
        if u.len() != n || d.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} flows and off-takes, got {} and {}",
                u.len(),
                d.len()
            )));
        }
        for i in 0..n {
            let u_out = if i == 0 { 0.0 } else { u[i - 1] };
            let state = &mut self.states[i];
            match &self.network.pools[i] {
                PoolParams::First(p) => step_first_order(state, p, u[i], u_out, d[i])?,
                PoolParams::Third(p) => step_third_order(state, p, u[i], u_out, d[i])?,
            };
        }
        Ok(())
    }
}
