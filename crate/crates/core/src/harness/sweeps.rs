use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::weights::CostWeights;

use super::run::run_scenario;
use super::scenario::{disturbance_scenario, setpoint_scenario, ControllerKind, PerPool, Scenario};
use super::trace::{evaluate_cost, CostBreakdown};

/// One cell of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Network size or disturbance pool, depending on the sweep.
    pub parameter: usize,
    pub controller: ControllerKind,
    pub cost: CostBreakdown,
    pub p_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeSweepKind {
    /// Off-take in pool `N - 1` on `[200, 400)`.
    Disturbance,
    /// `y_1 = -1`, `y_N = 1`.
    Setpoint,
}

fn run_grid(jobs: Vec<(usize, Scenario, ControllerKind)>) -> Result<Vec<SweepRow>> {
    jobs.into_par_iter()
        .map(|(parameter, scenario, controller)| {
            let trace = run_scenario(&scenario, controller)?;
            Ok(SweepRow {
                parameter,
                controller,
                cost: trace.cost(),
                p_factor: trace.p_factor,
            })
        })
        .collect()
}

pub fn sweep_network_size(sizes: &[usize], controllers: &[ControllerKind], kind: SizeSweepKind) -> Result<Vec<SweepRow>> {
    let mut jobs = Vec::new();
    for &n in sizes {
        if n < 2 {
            return Err(invalid("sizes", "networks need at least two pools"));
        }
        let scenario = match kind {
            SizeSweepKind::Disturbance => disturbance_scenario(n, n - 1),
            SizeSweepKind::Setpoint => setpoint_scenario(n),
        };
        jobs.extend(controllers.iter().map(|&c| (n, scenario.clone(), c)));
    }
    run_grid(jobs)
}

pub fn sweep_disturbance_location(n: usize, pools: &[usize], controllers: &[ControllerKind]) -> Result<Vec<SweepRow>> {
    let mut jobs = Vec::new();
    for &pool in pools {
        if pool == 0 || pool > n {
            return Err(invalid("pools", format!("pool {pool} outside 1..={n}")));
        }
        let scenario = disturbance_scenario(n, pool);
        jobs.extend(controllers.iter().map(|&c| (pool, scenario.clone(), c)));
    }
    run_grid(jobs)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], parameter: &str, mut out: W) -> Result<()> {
    writeln!(out, "{parameter},controller,total,level,input,deltau,p_factor")?;
    for r in rows {
        let factor = r.p_factor.map(|f| f.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e},{}",
            r.parameter,
            r.controller.name(),
            r.cost.total,
            r.cost.level,
            r.cost.input,
            r.cost.delta_u,
            factor
        )?;
    }
    Ok(())
}

/// Which design weight a trade-off curve varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeoffKnob {
    /// Structured controller, reservoir weight `r_N`.
    StructuredRn,
    /// Third-order LQ, `r_i` on every flow.
    Lq3R,
    /// Third-order LQ, `rho_i` on every flow increment, `r_N = 0.3`.
    Lq3Rho,
}

impl TradeoffKnob {
    pub fn name(self) -> &'static str {
        match self {
            TradeoffKnob::StructuredRn => "structured_r_n",
            TradeoffKnob::Lq3R => "lq3_r",
            TradeoffKnob::Lq3Rho => "lq3_rho",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffGrid {
    pub n: usize,
    pub pool: usize,
    pub structured_r_n: Vec<f64>,
    pub lq3_r: Vec<f64>,
    pub lq3_rho: Vec<f64>,
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (points - 1) as f64))
        .collect()
}

impl Default for TradeoffGrid {
    fn default() -> Self {
        Self {
            n: 10,
            pool: 5,
            structured_r_n: log_grid(-2.0, 2.0, 9),
            lq3_r: log_grid(-2.0, 2.0, 9),
            lq3_rho: log_grid(-1.0, 3.0, 9),
        }
    }
}

/// Unweighted sums of one trade-off run.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub knob: TradeoffKnob,
    pub value: f64,
    pub sum_y2: f64,
    pub sum_u2: f64,
    pub sum_du2: f64,
    /// Reservoir flow alone.
    pub sum_un2: f64,
}

pub fn sweep_tradeoff(grid: &TradeoffGrid) -> Result<Vec<TradeoffPoint>> {
    let base = disturbance_scenario(grid.n, grid.pool);
    let mut jobs = Vec::new();
    for &v in &grid.structured_r_n {
        let mut s = base.clone();
        s.weights.r_n = v;
        jobs.push((TradeoffKnob::StructuredRn, v, s, ControllerKind::Structured));
    }
    for &v in &grid.lq3_r {
        let mut s = base.clone();
        s.weights.r = Some(PerPool::All(v));
        jobs.push((TradeoffKnob::Lq3R, v, s, ControllerKind::Lq3));
    }
    for &v in &grid.lq3_rho {
        let mut s = base.clone();
        s.weights.rho = PerPool::All(v);
        jobs.push((TradeoffKnob::Lq3Rho, v, s, ControllerKind::Lq3));
    }
    let unit = CostWeights {
        q: vec![1.0; grid.n],
        r: vec![1.0; grid.n],
        rho: vec![1.0; grid.n],
    };
    jobs.into_par_iter()
        .map(|(knob, value, scenario, controller)| {
            let trace = run_scenario(&scenario, controller)?;
            let c = evaluate_cost(&trace, &unit)?;
            let sum_un2 = trace.u.iter().map(|u| u[grid.n - 1] * u[grid.n - 1]).sum();
            Ok(TradeoffPoint {
                knob,
                value,
                sum_y2: c.level,
                sum_u2: c.input,
                sum_du2: c.delta_u,
                sum_un2,
            })
        })
        .collect()
}

pub fn write_tradeoff_csv<W: Write>(points: &[TradeoffPoint], mut out: W) -> Result<()> {
    writeln!(out, "curve,value,sum_y2,sum_u2,sum_du2,sum_un2")?;
    for p in points {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e}",
            p.knob.name(),
            p.value,
            p.sum_y2,
            p.sum_u2,
            p.sum_du2,
            p.sum_un2
        )?;
    }
    Ok(())
}
