use std::io::Write;

use crate::error::{Error, Result};
use crate::weights::CostWeights;

use super::scenario::ControllerKind;

/// Quadratic cost split by term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub total: f64,
    pub level: f64,
    pub input: f64,
    pub delta_u: f64,
}

/// Closed-loop record. Row `t` holds the level at `t`, the flows applied
/// at `t`, the off-takes entering the plant at `t`, and the cost
/// accumulated up to and including `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub controller: ControllerKind,
    pub y: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub cum_level: Vec<f64>,
    pub cum_input: Vec<f64>,
    pub cum_delta_u: Vec<f64>,
    /// Gain factor selected for the P controller.
    pub p_factor: Option<f64>,
}

impl SimTrace {
    pub fn new(controller: ControllerKind) -> Self {
        Self {
            controller,
            y: Vec::new(),
            u: Vec::new(),
            d: Vec::new(),
            cum_level: Vec::new(),
            cum_input: Vec::new(),
            cum_delta_u: Vec::new(),
            p_factor: None,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn pools(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, y: Vec<f64>, u: Vec<f64>, d: Vec<f64>) {
        self.y.push(y);
        self.u.push(u);
        self.d.push(d);
    }

    /// Fills the cumulative cost columns.
    pub fn accumulate(&mut self, w: &CostWeights) -> Result<()> {
        let series = cost_series(self, w)?;
        self.cum_level = series.iter().map(|c| c.level).collect();
        self.cum_input = series.iter().map(|c| c.input).collect();
        self.cum_delta_u = series.iter().map(|c| c.delta_u).collect();
        Ok(())
    }

    pub fn cost(&self) -> CostBreakdown {
        match (self.cum_level.last(), self.cum_input.last(), self.cum_delta_u.last()) {
            (Some(&level), Some(&input), Some(&delta_u)) => CostBreakdown {
                total: level + input + delta_u,
                level,
                input,
                delta_u,
            },
            _ => CostBreakdown::default(),
        }
    }

    /// Largest level or flow magnitude in the last sample relative to the
    /// largest over the whole trace; how far the truncated cost is from
    /// settled.
    pub fn final_to_peak(&self) -> f64 {
        let peak = self.y.iter().chain(&self.u).flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = self.y.last().into_iter().chain(self.u.last()).flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            0.0
        } else {
            last / peak
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.pools();
        let mut header = vec!["t".to_string()];
        for prefix in ["y", "u", "d"] {
            header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
        header.extend(["cost_cum_level", "cost_cum_input", "cost_cum_deltau"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for t in 0..self.len() {
            let mut row = vec![t.to_string()];
            for v in self.y[t].iter().chain(&self.u[t]).chain(&self.d[t]) {
                row.push(format!("{v:e}"));
            }
            for col in [&self.cum_level, &self.cum_input, &self.cum_delta_u] {
                row.push(format!("{:e}", col.get(t).copied().unwrap_or(0.0)));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Running cost per sample. The increment `u[t] - u[t-1]` is charged at
/// row `t`.
pub fn cost_series(trace: &SimTrace, w: &CostWeights) -> Result<Vec<CostBreakdown>> {
    let n = trace.pools();
    if w.len() != n && !trace.is_empty() {
        return Err(Error::Dimension(format!("{} weights for {n} pools", w.len())));
    }
    let mut acc = CostBreakdown::default();
    let mut out = Vec::with_capacity(trace.len());
    for t in 0..trace.len() {
        for i in 0..n {
            acc.level += w.q[i] * trace.y[t][i] * trace.y[t][i];
            acc.input += w.r[i] * trace.u[t][i] * trace.u[t][i];
            if t > 0 {
                let du = trace.u[t][i] - trace.u[t - 1][i];
                acc.delta_u += w.rho[i] * du * du;
            }
        }
        acc.total = acc.level + acc.input + acc.delta_u;
        out.push(acc);
    }
    Ok(out)
}

/// Total cost of a trace and its three terms.
pub fn evaluate_cost(trace: &SimTrace, w: &CostWeights) -> Result<CostBreakdown> {
    Ok(cost_series(trace, w)?.last().copied().unwrap_or_default())
}
