use crate::error::{Error, Result};
use crate::history::History;

use super::params::{FirstOrderPoolParams, ThirdOrderPoolParams};

/// Lagged signals of one pool.
///
/// Level history holds `y[t]`, `y[t-1]`, `y[t-2]`. Input histories are
/// written by the step functions: after a step at time `t`, `lag(0)` of each
/// input buffer is the value applied at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSimState {
    pub level: History,
    pub inflow: History,
    pub outflow: History,
    pub offtake: History,
}

impl PoolSimState {
    /// Pool at rest at `level` with zero flow histories of the given depths.
    pub fn at_rest(level: f64, inflow_depth: usize, outflow_depth: usize) -> Self {
        Self {
            level: History::new(3, level),
            inflow: History::zeros(inflow_depth),
            outflow: History::zeros(outflow_depth),
            offtake: History::zeros(outflow_depth),
        }
    }

    pub fn for_third_order(params: &ThirdOrderPoolParams, level: f64) -> Self {
        Self::at_rest(level, params.tau + 3, 3)
    }

    pub fn for_first_order(params: &FirstOrderPoolParams, level: f64) -> Self {
        Self::at_rest(level, params.tau + params.tau_bar + 1, params.tau_bar + 1)
    }

    /// Current level `y[t]`.
    pub fn y(&self) -> f64 {
        self.level.lag(0).expect("level history has depth 3")
    }

    fn push_inputs(&mut self, u_in: f64, u_out: f64, d: f64) {
        self.inflow.push(u_in);
        self.outflow.push(u_out);
        self.offtake.push(d);
    }

    fn check_depths(&self, inflow_lag: usize, outflow_lag: usize) -> Result<()> {
        for (needed, buf) in [
            (inflow_lag, &self.inflow),
            (outflow_lag, &self.outflow),
            (outflow_lag, &self.offtake),
        ] {
            if buf.depth() <= needed {
                return Err(Error::InsufficientHistory {
                    needed: needed + 1,
                    available: buf.depth(),
                });
            }
        }
        Ok(())
    }

    /// Net outflow `u_{i-1}[t-k] - d_i[t-k]`.
    fn net_out(&self, k: usize) -> Result<f64> {
        Ok(self.outflow.lag(k)? - self.offtake.lag(k)?)
    }
}

/// Advances a third-order pool by one sample.
///
/// Inputs are the values at time `t`; returns `y[t+1]`, which also becomes
/// the newest entry of the level history.
pub fn step_third_order(
    state: &mut PoolSimState,
    p: &ThirdOrderPoolParams,
    u_in: f64,
    u_out: f64,
    d: f64,
) -> Result<f64> {
    state.check_depths(p.tau + 2, 2)?;
    state.push_inputs(u_in, u_out, d);
    let y0 = state.level.lag(0)?;
    let y1 = state.level.lag(1)?;
    let y2 = state.level.lag(2)?;
    let inflow = p.b[0] * state.inflow.lag(p.tau)? - p.b[1] * state.inflow.lag(p.tau + 1)?
        + p.b[2] * state.inflow.lag(p.tau + 2)?;
    let outflow = -p.c[0] * state.net_out(0)? + p.c[1] * state.net_out(1)?
        - p.c[2] * state.net_out(2)?;
    let next = inflow
        + outflow
        + y0
        + p.alpha[0] * (y0 - 2.0 * y1 + y2)
        + p.alpha[1] * (y0 - y1);
    state.level.push(next);
    Ok(next)
}

/// Advances a first-order delayed pool by one sample:
/// `y[t+1] = y[t] + b u_i[t-tau-tau_bar] - c (u_{i-1}[t-tau_bar] - d_i[t-tau_bar])`.
pub fn step_first_order(
    state: &mut PoolSimState,
    p: &FirstOrderPoolParams,
    u_in: f64,
    u_out: f64,
    d: f64,
) -> Result<f64> {
    state.check_depths(p.tau + p.tau_bar, p.tau_bar)?;
    state.push_inputs(u_in, u_out, d);
    let next = state.level.lag(0)? + p.b * state.inflow.lag(p.tau + p.tau_bar)?
        - p.c * state.net_out(p.tau_bar)?;
    state.level.push(next);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowChannel {
    Inflow,
    Outflow,
}

/// Long-run level slope per sample caused by a unit constant flow on the
/// channel. Outflow lowers the level; the magnitude is returned.
pub fn dc_slope_third_order(p: &ThirdOrderPoolParams, channel: FlowChannel) -> Result<f64> {
    let denom = 1.0 - p.alpha[1];
    if denom.abs() < 1e-12 {
        return Err(Error::Singular(format!(
            "alpha2 = {} makes the ramp slope unbounded",
            p.alpha[1]
        )));
    }
    let k = match channel {
        FlowChannel::Inflow => p.b,
        FlowChannel::Outflow => p.c,
    };
    Ok((k[0] - k[1] + k[2]) / denom)
}

pub fn dc_slope_first_order(p: &FirstOrderPoolParams, channel: FlowChannel) -> f64 {
    match channel {
        FlowChannel::Inflow => p.b,
        FlowChannel::Outflow => p.c,
    }
}
