use std::path::Path;

use serde::Deserialize;

use crate::baseline_p::{FeedforwardSource, GAIN_FACTORS};
use crate::error::{invalid, Error, Result};
use crate::plant::{DesignDelays, FirstOrderPoolParams, NetworkKind, NetworkModel, ParamTable, PoolModel};
use crate::weights::CostWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Structured,
    Lq3,
    P,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::Lq3, ControllerKind::Structured, ControllerKind::P];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Structured => "structured",
            ControllerKind::Lq3 => "lq3",
            ControllerKind::P => "p",
        }
    }
}

/// A weight given once for every pool or per pool.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PerPool {
    All(f64),
    Each(Vec<f64>),
}

impl PerPool {
    fn expand(&self, n: usize, name: &'static str) -> Result<Vec<f64>> {
        match self {
            PerPool::All(v) => Ok(vec![*v; n]),
            PerPool::Each(v) if v.len() == n => Ok(v.clone()),
            PerPool::Each(v) => Err(invalid(name, format!("{} values for {n} pools", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSpec {
    pub q: PerPool,
    /// Reservoir weight, used when `r` is absent.
    pub r_n: f64,
    pub r: Option<PerPool>,
    pub rho: PerPool,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            q: PerPool::All(1.0),
            r_n: 0.3,
            r: None,
            rho: PerPool::All(0.0),
        }
    }
}

impl WeightSpec {
    pub fn resolve(&self, n: usize) -> Result<CostWeights> {
        let r = match &self.r {
            Some(r) => r.expand(n, "r")?,
            None => CostWeights::reservoir_only(n, 1.0, self.r_n).r,
        };
        let w = CostWeights {
            q: self.q.expand(n, "q")?,
            r,
            rho: self.rho.expand(n, "rho")?,
        };
        w.validate(n)?;
        Ok(w)
    }
}

/// Constant off-take on `[start, end)` that changes the level of `pool`
/// by `rate` units per sample; positive rates withdraw water.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub pool: usize,
    pub start: usize,
    pub end: usize,
    #[serde(default = "one")]
    pub rate: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PSpec {
    pub factors: Vec<f64>,
    pub k_ff: f64,
    pub feedforward: FeedforwardSource,
}

impl Default for PSpec {
    fn default() -> Self {
        Self {
            factors: GAIN_FACTORS.to_vec(),
            k_ff: 1.0,
            feedforward: FeedforwardSource::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KalmanSpec {
    pub enabled: bool,
    pub r1: f64,
    pub r2: f64,
}

impl Default for KalmanSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            r1: 1.0,
            r2: 100.0,
        }
    }
}

/// Delays and gains of the first-order synthesis model.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSpec {
    pub tau_bar: usize,
    pub tau_one: usize,
    pub tau_two: usize,
    /// Extra factor on `b` of the second pool model.
    pub b_two_multiplier: f64,
}

impl Default for DesignSpec {
    fn default() -> Self {
        let d = DesignDelays::default();
        Self {
            tau_bar: d.tau_bar,
            tau_one: d.tau_one,
            tau_two: d.tau_two,
            b_two_multiplier: 1.0,
        }
    }
}

/// Closed-loop experiment on the third-order plant.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub pools: usize,
    #[serde(default = "homogeneous")]
    pub kind: NetworkKind,
    #[serde(default)]
    pub initial_levels: Option<Vec<f64>>,
    /// Negates the initial levels.
    #[serde(default)]
    pub flip_initial: bool,
    #[serde(default)]
    pub disturbance: Vec<DisturbanceSpec>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub weights: WeightSpec,
    /// Low-pass filtering of flows and off-takes.
    #[serde(default = "yes")]
    pub filter: bool,
    #[serde(default)]
    pub kalman: KalmanSpec,
    #[serde(default)]
    pub p: PSpec,
    #[serde(default)]
    pub design: DesignSpec,
}

fn homogeneous() -> NetworkKind {
    NetworkKind::Homogeneous
}

fn default_horizon() -> usize {
    3000
}

fn yes() -> bool {
    true
}

impl Scenario {
    /// `n` pools at rest, default weights and options.
    pub fn new(n: usize, kind: NetworkKind) -> Self {
        Self {
            pools: n,
            kind,
            initial_levels: None,
            flip_initial: false,
            disturbance: Vec::new(),
            horizon: default_horizon(),
            weights: WeightSpec::default(),
            filter: true,
            kalman: KalmanSpec::default(),
            p: PSpec::default(),
            design: DesignSpec::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pools == 0 {
            return Err(Error::Config("pools must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if let Some(y) = &self.initial_levels {
            if y.len() != self.pools {
                return Err(Error::Config(format!("{} initial levels for {} pools", y.len(), self.pools)));
            }
        }
        for d in &self.disturbance {
            if d.pool == 0 || d.pool > self.pools {
                return Err(Error::Config(format!("disturbance pool {} outside 1..={}", d.pool, self.pools)));
            }
            if d.start >= d.end {
                return Err(Error::Config(format!("empty disturbance window [{}, {})", d.start, d.end)));
            }
        }
        if self.p.factors.is_empty() {
            return Err(Error::Config("at least one P gain factor is needed".into()));
        }
        if self.design.b_two_multiplier.is_nan() || self.design.b_two_multiplier <= 0.0 {
            return Err(Error::Config("b_two_multiplier must be positive".into()));
        }
        self.weights.resolve(self.pools)?;
        Ok(())
    }

    pub fn weights(&self) -> Result<CostWeights> {
        self.weights.resolve(self.pools)
    }

    pub fn initial(&self) -> Vec<f64> {
        let sign = if self.flip_initial { -1.0 } else { 1.0 };
        match &self.initial_levels {
            Some(y) => y.iter().map(|v| sign * v).collect(),
            None => vec![0.0; self.pools],
        }
    }

    pub fn plant_network(&self, table: &ParamTable) -> Result<NetworkModel> {
        NetworkModel::third_order(table, self.pools, self.kind)
    }

    fn delays(&self) -> DesignDelays {
        DesignDelays {
            tau_bar: self.design.tau_bar,
            tau_one: self.design.tau_one,
            tau_two: self.design.tau_two,
        }
    }

    /// First-order synthesis model of every pool.
    pub fn design_pools(&self, table: &ParamTable) -> Result<Vec<FirstOrderPoolParams>> {
        let net = NetworkModel::first_order(table, self.pools, self.kind, &self.delays())?;
        let mut pools = net.first_order_pools()?;
        for (p, m) in pools.iter_mut().zip(&net.models) {
            if *m == PoolModel::Two {
                p.b *= self.design.b_two_multiplier;
            }
        }
        Ok(pools)
    }

    /// Raw off-take schedule `d[t][i]` over the horizon. The level rate is
    /// converted to a flow through the pool's first-order outflow gain.
    pub fn offtakes(&self, table: &ParamTable) -> Result<Vec<Vec<f64>>> {
        let pools = self.design_pools(table)?;
        let mut d = vec![vec![0.0; self.pools]; self.horizon];
        for spec in &self.disturbance {
            let c = pools[spec.pool - 1].c;
            for dt in d.iter_mut().take(spec.end).skip(spec.start) {
                dt[spec.pool - 1] += -spec.rate / c;
            }
        }
        Ok(d)
    }
}

/// Five alternating pools moving water from pool 5 to pool 1, then an
/// off-take in pool 1 on `[250, 450)`.
pub fn time_response_scenario() -> Scenario {
    let mut s = Scenario::new(5, NetworkKind::Alternating);
    s.initial_levels = Some(vec![5.0, 0.0, 0.0, 0.0, -5.0]);
    s.disturbance.push(DisturbanceSpec {
        pool: 1,
        start: 250,
        end: 450,
        rate: 1.0,
    });
    s
}

/// Homogeneous string with an off-take in `pool` on `[200, 400)`.
pub fn disturbance_scenario(n: usize, pool: usize) -> Scenario {
    let mut s = Scenario::new(n, NetworkKind::Homogeneous);
    s.disturbance.push(DisturbanceSpec {
        pool,
        start: 200,
        end: 400,
        rate: 1.0,
    });
    s
}

/// Homogeneous string with `y_1 = -1`, `y_N = 1`.
pub fn setpoint_scenario(n: usize) -> Scenario {
    let mut s = Scenario::new(n, NetworkKind::Homogeneous);
    let mut y = vec![0.0; n];
    y[0] = -1.0;
    y[n - 1] = 1.0;
    s.initial_levels = Some(y);
    s
}
