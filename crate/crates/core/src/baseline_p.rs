//! Distant-downstream proportional control with flow and off-take
//! feed-forward.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::filters::{IirCoeffs, IirFilter};
use crate::plant::FirstOrderPoolParams;

/// Gain scalings tried by the harness; the best run is kept.
pub const GAIN_FACTORS: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];

/// `k = factor * pi / (8 (tau + tau_bar) b)`.
pub fn p_gain(tau: usize, tau_bar: usize, b: f64, factor: f64) -> Result<f64> {
    let delay = tau + tau_bar;
    if delay == 0 {
        return Err(invalid("tau", "total delay must be positive"));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(invalid("b", "must be positive"));
    }
    if !(factor.is_finite() && factor > 0.0) {
        return Err(invalid("factor", "must be positive"));
    }
    Ok(factor * PI / (8.0 * delay as f64 * b))
}

/// Gain margin of `k b z^-(tau+tau_bar) / (z - 1)` in the low-frequency
/// approximation.
pub fn gain_margin(tau: usize, tau_bar: usize, b: f64, k: f64) -> f64 {
    PI / (2.0 * (tau + tau_bar) as f64 * b * k)
}

/// Phase margin in radians, same approximation.
pub fn phase_margin(tau: usize, tau_bar: usize, b: f64, k: f64) -> f64 {
    PI / 2.0 - (tau + tau_bar) as f64 * b * k
}

/// `u_i[t] = -k y_i[t] + k_ff (c/b)(u_{i-1}[t-1] - d_i[t+tau])`.
pub fn p_step(k: f64, k_ff: f64, b: f64, c: f64, y: f64, u_down_prev: f64, d_ahead: f64) -> f64 {
    -k * y + k_ff * (c / b) * (u_down_prev - d_ahead)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PGains {
    pub k: Vec<f64>,
    pub k_ff: f64,
}

impl PGains {
    pub fn new(pools: &[FirstOrderPoolParams], factor: f64, k_ff: f64) -> Result<Self> {
        let k = pools
            .iter()
            .map(|p| p_gain(p.tau, p.tau_bar, p.b, factor))
            .collect::<Result<_>>()?;
        Ok(Self { k, k_ff })
    }
}

/// Which off-take signal feeds the feed-forward term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedforwardSource {
    /// Planned off-takes after the low-pass filter.
    #[default]
    Filtered,
    Raw,
}

/// Per-gate P controllers with low-pass filtered outputs.
#[derive(Debug, Clone)]
pub struct PController {
    gains: PGains,
    pools: Vec<FirstOrderPoolParams>,
    /// Time-major off-takes used by the feed-forward term.
    planned: Vec<Vec<f64>>,
    computed: Vec<f64>,
    filters: Option<Vec<IirFilter>>,
}

impl PController {
    /// `schedule` is the raw planned off-take `d[t][i]`; `filter = None`
    /// disables output filtering (and filtering of the planned off-takes).
    pub fn new(
        pools: &[FirstOrderPoolParams],
        gains: PGains,
        schedule: &[Vec<f64>],
        source: FeedforwardSource,
        filter: Option<&IirCoeffs>,
    ) -> Result<Self> {
        let n = pools.len();
        if gains.k.len() != n {
            return Err(Error::Dimension(format!("{} gains for {n} pools", gains.k.len())));
        }
        if let Some(bad) = schedule.iter().position(|d| d.len() != n) {
            return Err(Error::Dimension(format!("d[{bad}] has {} entries", schedule[bad].len())));
        }
        let planned = match (source, filter) {
            (FeedforwardSource::Filtered, Some(coeffs)) => {
                let mut bank: Vec<IirFilter> = (0..n).map(|_| IirFilter::new(coeffs.clone())).collect();
                schedule
                    .iter()
                    .map(|dt| bank.iter_mut().zip(dt).map(|(f, &x)| f.step(x)).collect())
                    .collect()
            }
            _ => schedule.to_vec(),
        };
        Ok(Self {
            gains,
            pools: pools.to_vec(),
            planned,
            computed: vec![0.0; n],
            filters: filter.map(|c| (0..n).map(|_| IirFilter::new(c.clone())).collect()),
        })
    }

    pub fn gains(&self) -> &PGains {
        &self.gains
    }

    /// Planned off-take `d_i[s]`; zero past the end of the schedule.
    fn planned(&self, i: usize, s: usize) -> f64 {
        self.planned.get(s).map_or(0.0, |dt| dt[i])
    }

    /// Flows for sample `t` from measured levels; returns the filtered
    /// flows to apply.
    pub fn step(&mut self, t: usize, levels: &[f64]) -> Result<Vec<f64>> {
        let n = self.pools.len();
        if levels.len() != n {
            return Err(Error::Dimension(format!("{} levels for {n} pools", levels.len())));
        }
        let prev = self.computed.clone();
        for i in 0..n {
            let p = &self.pools[i];
            let down = if i == 0 { 0.0 } else { prev[i - 1] };
            let d = self.planned(i, t + p.tau);
            self.computed[i] = p_step(self.gains.k[i], self.gains.k_ff, p.b, p.c, levels[i], down, d);
        }
        Ok(match &mut self.filters {
            Some(bank) => bank.iter_mut().zip(&self.computed).map(|(f, &u)| f.step(u)).collect(),
            None => self.computed.clone(),
        })
    }

    /// Flows computed at the last step, before filtering.
    pub fn computed(&self) -> &[f64] {
        &self.computed
    }
}
