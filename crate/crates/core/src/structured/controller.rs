use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{invalid, Error, Result};
use crate::history::History;
use crate::plant::FirstOrderPoolParams;
use crate::weights::CostWeights;

use super::messages::{LoggedMessage, MessageLog, Node, SweepMessage};
use super::params::{compute_params, ControlParams};

/// Tolerance for the consistency check on shifted aggregates.
const SHIFT_TOLERANCE: f64 = 1e-9;

type Outbox = Vec<(Node, SweepMessage)>;

/// `sum_{s=from}^{to} x[t-s]` for `from >= 1`, where `lag(0)` is `x[t-1]`.
fn past(h: &History, from: usize, to: usize) -> Result<f64> {
    if to < from {
        return Ok(0.0);
    }
    h.sum(from - 1, to - 1)
}

fn get(map: &BTreeMap<i64, f64>, s: i64) -> f64 {
    map.get(&s).copied().unwrap_or(0.0)
}

/// Local memory of one gate; all quantities are in scaled variables.
#[derive(Debug, Clone)]
struct GateAgent {
    index: usize,
    tau: usize,
    tau_bar: usize,
    sigma: i64,
    level_scale: f64,
    d_scale: f64,
    /// `gamma_i / q_tilde_i`, used for the outgoing flow; unused at gate 1.
    coupling: f64,
    /// Own inflow `u_i[t-1..]`, written by the upstream neighbour.
    inflow: History,
    /// Own outgoing flow `u_{i-1}[t-1..]`.
    outflow: History,
    d_hat: BTreeMap<i64, f64>,
    pending: BTreeMap<i64, f64>,
    /// Last `D_{i-1}` values received from downstream.
    below: BTreeMap<i64, f64>,
    aggregate: BTreeMap<i64, f64>,
    inbox: VecDeque<(Node, SweepMessage)>,
    outgoing: f64,
}

impl GateAgent {
    fn node(&self) -> Node {
        Node::Gate(self.index)
    }

    fn upstream(&self, n: usize) -> Node {
        if self.index == n {
            Node::Reservoir
        } else {
            Node::Gate(self.index + 1)
        }
    }

    fn aggregate_at(&self, s: i64) -> f64 {
        get(&self.aggregate, s)
    }

    /// `D_{i-1}[t + sigma_i] = D_i[t + sigma_i] - d_i[t]`, sent downstream.
    fn shift_message(&self, t: i64) -> Option<(Node, SweepMessage)> {
        (self.index > 1).then(|| {
            let s = t + self.sigma;
            let value = self.aggregate_at(s) - get(&self.d_hat, t);
            (Node::Gate(self.index - 1), SweepMessage::DownstreamD { s, value })
        })
    }

    fn check_shift(&mut self) -> Result<()> {
        while let Some((from, msg)) = self.inbox.pop_front() {
            let SweepMessage::DownstreamD { s, value } = msg else {
                return Err(Error::Protocol(format!("gate {} got {} before the sweep", self.index, msg.kind())));
            };
            let stored = self.aggregate_at(s);
            let scale = value.abs().max(stored.abs()).max(1.0);
            if (stored - value).abs() > SHIFT_TOLERANCE * scale {
                return Err(Error::Protocol(format!(
                    "gate {} holds D[{s}] = {stored}, {from} reports {value}",
                    self.index
                )));
            }
        }
        Ok(())
    }

    /// Serial phase: commit announcements, absorb downstream messages,
    /// forward changed aggregates and `m_i`, and form the outgoing flow.
    fn sweep(&mut self, t: i64, z: f64, n: usize) -> Result<Outbox> {
        let mut dirty = BTreeSet::new();
        for (s, raw) in std::mem::take(&mut self.pending) {
            self.d_hat.insert(s, self.d_scale * raw);
            dirty.insert(s + self.sigma);
        }
        let mut m_below = None;
        while let Some((_, msg)) = self.inbox.pop_front() {
            match msg {
                SweepMessage::UpstreamD { s, value } => {
                    self.below.insert(s, value);
                    dirty.insert(s);
                }
                SweepMessage::UpstreamM { m } => m_below = Some(m),
                other => {
                    return Err(Error::Protocol(format!(
                        "gate {} got {} during the sweep",
                        self.index,
                        other.kind()
                    )))
                }
            }
        }
        let up = self.upstream(n);
        let mut out = Vec::with_capacity(dirty.len() + 1);
        for s in dirty {
            let value = get(&self.below, s) + get(&self.d_hat, s - self.sigma);
            self.aggregate.insert(s, value);
            out.push((up, SweepMessage::UpstreamD { s, value }));
        }
        let (tau, tau_bar, sigma) = (self.tau, self.tau_bar, self.sigma);
        let (d_hat, aggregate) = (&self.d_hat, &self.aggregate);
        let d_recent = |from: i64, to: i64| -> f64 { (from..=to).map(|k| get(d_hat, t - k)).sum() };
        let d_ahead = |from: i64, to: i64| -> f64 { (from..=to).map(|k| get(aggregate, t + sigma + k)).sum() };
        let m = if self.index == 1 {
            z + past(&self.inflow, 1, tau + tau_bar)?
                + d_recent(1, tau_bar as i64)
                + d_ahead(0, tau as i64)
        } else {
            let m_below = m_below.ok_or_else(|| {
                Error::Protocol(format!("gate {} received no m from downstream", self.index))
            })?;
            let p = z + past(&self.inflow, tau, tau + tau_bar)? - past(&self.outflow, 1, tau_bar)?
                + d_recent(0, tau_bar as i64);
            let m = m_below + p + past(&self.inflow, 1, tau - 1)? + d_ahead(1, tau as i64);
            self.outgoing = (1.0 - self.coupling) * p - self.coupling * m_below;
            m
        };
        out.push((up, SweepMessage::UpstreamM { m }));
        Ok(out)
    }

    fn dispatch(&self) -> Option<(Node, SweepMessage)> {
        (self.index > 1).then(|| (Node::Gate(self.index - 1), SweepMessage::DownstreamU { u: self.outgoing }))
    }

    /// Records this sample's flows and drops memory no longer reachable.
    fn finish(&mut self, t: i64) -> Result<()> {
        let mut inflow = None;
        while let Some((_, msg)) = self.inbox.pop_front() {
            match msg {
                SweepMessage::DownstreamU { u } if inflow.is_none() => inflow = Some(u),
                other => {
                    return Err(Error::Protocol(format!(
                        "gate {} got an unexpected {} at dispatch",
                        self.index,
                        other.kind()
                    )))
                }
            }
        }
        let inflow = inflow.ok_or_else(|| Error::Protocol(format!("gate {} received no inflow", self.index)))?;
        self.inflow.push(inflow);
        if self.index > 1 {
            self.outflow.push(self.outgoing);
        }
        let next = t + 1;
        self.d_hat = self.d_hat.split_off(&(next - self.tau_bar as i64));
        self.aggregate = self.aggregate.split_off(&(next + self.sigma));
        self.below = self.below.split_off(&(next + self.sigma));
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct ReservoirAgent {
    sigma: i64,
    tau: usize,
    gain: f64,
    g: f64,
    aggregate: BTreeMap<i64, f64>,
    inbox: VecDeque<(Node, SweepMessage)>,
    release: f64,
}

impl ReservoirAgent {
    fn compute(&mut self, t: i64, horizon: Option<usize>) -> Result<()> {
        let mut m = None;
        while let Some((_, msg)) = self.inbox.pop_front() {
            match msg {
                SweepMessage::UpstreamD { s, value } => {
                    self.aggregate.insert(s, value);
                }
                SweepMessage::UpstreamM { m: v } => m = Some(v),
                other => return Err(Error::Protocol(format!("reservoir got {}", other.kind()))),
            }
        }
        let m = m.ok_or_else(|| Error::Protocol("reservoir received no m".into()))?;
        let base = t + self.sigma;
        let first = base + self.tau as i64 + 1;
        let last = horizon.map_or(i64::MAX, |h| base + h as i64);
        let mut ahead = 0.0;
        if first <= last {
            for (&s, &d) in self.aggregate.range(first..=last) {
                ahead += d * self.g.powi((s - base - self.tau as i64) as i32);
            }
        }
        self.release = -self.gain * (m + ahead);
        Ok(())
    }

    fn finish(&mut self, t: i64) {
        self.aggregate = self.aggregate.split_off(&(t + 1 + self.sigma + self.tau as i64 + 1));
    }
}

/// Structured LQ controller for a string of first-order pools, run as
/// gate agents that exchange scalar messages once per sample.
#[derive(Debug, Clone)]
pub struct StructuredController {
    params: ControlParams,
    pools: Vec<FirstOrderPoolParams>,
    gates: Vec<GateAgent>,
    reservoir: ReservoirAgent,
    t: i64,
    horizon: Option<usize>,
    log: Option<MessageLog>,
}

impl StructuredController {
    pub fn new(pools: &[FirstOrderPoolParams], weights: &CostWeights) -> Result<Self> {
        weights.validate(pools.len())?;
        weights.structured_compatible()?;
        let b: Vec<f64> = pools.iter().map(|p| p.b).collect();
        let c: Vec<f64> = pools.iter().map(|p| p.c).collect();
        let params = compute_params(&weights.q, weights.r[pools.len() - 1], &b, &c)?;
        Self::from_params(pools, params)
    }

    pub fn from_params(pools: &[FirstOrderPoolParams], params: ControlParams) -> Result<Self> {
        let n = pools.len();
        if n == 0 || params.len() != n {
            return Err(Error::Dimension(format!("{n} pools, {} gate parameters", params.len())));
        }
        let tau_bar = pools[0].tau_bar;
        for p in pools {
            p.validate()?;
            if p.tau_bar != tau_bar {
                return Err(Error::Config("pools must share tau_bar".into()));
            }
            if p.tau == 0 {
                return Err(invalid("tau", "the structured controller needs tau_i >= 1"));
            }
        }
        let mut gates = Vec::with_capacity(n);
        let mut sigma = 0i64;
        for (i, p) in pools.iter().enumerate() {
            let (level_scale, d_scale, coupling) = if i == 0 {
                (1.0, p.c, 0.0)
            } else {
                let prev = params.b_hat[i - 1];
                (prev / p.c, prev, params.gamma[i] / params.q_tilde[i])
            };
            gates.push(GateAgent {
                index: i + 1,
                tau: p.tau,
                tau_bar,
                sigma,
                level_scale,
                d_scale,
                coupling,
                inflow: History::zeros(p.tau + tau_bar),
                outflow: History::zeros(tau_bar),
                d_hat: BTreeMap::new(),
                pending: BTreeMap::new(),
                below: BTreeMap::new(),
                aggregate: BTreeMap::new(),
                inbox: VecDeque::new(),
                outgoing: 0.0,
            });
            sigma += p.tau as i64;
        }
        let top = &gates[n - 1];
        let reservoir = ReservoirAgent {
            sigma: top.sigma,
            tau: top.tau,
            gain: params.x / params.r_tilde,
            g: params.g,
            aggregate: BTreeMap::new(),
            inbox: VecDeque::new(),
            release: 0.0,
        };
        Ok(Self {
            params,
            pools: pools.to_vec(),
            gates,
            reservoir,
            t: 0,
            horizon: None,
            log: None,
        })
    }

    pub fn params(&self) -> &ControlParams {
        &self.params
    }

    pub fn pools(&self) -> &[FirstOrderPoolParams] {
        &self.pools
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Index of the next sample to be computed.
    pub fn time(&self) -> i64 {
        self.t
    }

    /// Cumulative delay `sigma_i` for gate `i` (1-based).
    pub fn sigma(&self, gate: usize) -> i64 {
        self.gates[gate - 1].sigma
    }

    /// Factor mapping an off-take at gate `i` to scaled variables.
    pub fn disturbance_scale(&self, gate: usize) -> f64 {
        self.gates[gate - 1].d_scale
    }

    /// Stored aggregate `D_i[s]` in scaled variables; zero when absent.
    pub fn aggregate(&self, gate: usize, s: i64) -> f64 {
        self.gates[gate - 1].aggregate_at(s)
    }

    /// Horizon `H` for announcements and the reservoir look-ahead; `None`
    /// covers everything announced.
    pub fn set_horizon(&mut self, horizon: Option<usize>) {
        self.horizon = horizon;
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn enable_log(&mut self) {
        self.log.get_or_insert_with(MessageLog::default);
    }

    pub fn log(&self) -> Option<&MessageLog> {
        self.log.as_ref()
    }

    /// Announces off-takes `d_i[s]` (original units) for gate `i`, 1-based.
    /// Changes take effect in the next tick's sweep.
    pub fn announce_disturbance<I>(&mut self, gate: usize, schedule: I) -> Result<()>
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        if gate == 0 || gate > self.gates.len() {
            return Err(invalid("gate", format!("{gate} is not in 1..={}", self.gates.len())));
        }
        let entries: Vec<(i64, f64)> = schedule.into_iter().collect();
        for &(s, value) in &entries {
            if !value.is_finite() {
                return Err(invalid("disturbance", "must be finite"));
            }
            if s < self.t {
                return Err(Error::Config(format!("announcement for past time {s} at tick {}", self.t)));
            }
            if let Some(h) = self.horizon {
                let limit = self.t + h as i64;
                if s > limit {
                    return Err(Error::BeyondHorizon { time: s, limit });
                }
            }
        }
        self.gates[gate - 1].pending.extend(entries);
        Ok(())
    }

    fn deliver(&mut self, from: Node, to: Node, message: SweepMessage) {
        if let Some(log) = &mut self.log {
            log.entries.push(LoggedMessage {
                tick: self.t,
                from,
                to,
                message,
            });
        }
        match to {
            Node::Gate(i) => self.gates[i - 1].inbox.push_back((from, message)),
            Node::Reservoir => self.reservoir.inbox.push_back((from, message)),
        }
    }

    /// One sample of the protocol. `levels` are the level estimates in
    /// original units; returns the flows `u_1..u_N` in original units.
    pub fn tick(&mut self, levels: &[f64]) -> Result<Vec<f64>> {
        let n = self.gates.len();
        if levels.len() != n {
            return Err(Error::Dimension(format!("{} levels for {n} gates", levels.len())));
        }
        let t = self.t;
        // Shift of unchanged aggregates, all gates in parallel.
        let shifts: Vec<_> = self.gates.iter().filter_map(|g| g.shift_message(t).map(|m| (g.node(), m))).collect();
        for (from, (to, msg)) in shifts {
            self.deliver(from, to, msg);
        }
        for g in &mut self.gates {
            g.check_shift()?;
        }
        // Upstream sweep.
        for i in 0..n {
            let z = self.gates[i].level_scale * levels[i];
            let out = self.gates[i].sweep(t, z, n)?;
            let from = self.gates[i].node();
            for (to, msg) in out {
                self.deliver(from, to, msg);
            }
        }
        self.reservoir.compute(t, self.horizon)?;
        // Downstream dispatch.
        self.deliver(Node::Reservoir, Node::Gate(n), SweepMessage::DownstreamU { u: self.reservoir.release });
        for i in (0..n).rev() {
            if let Some((to, msg)) = self.gates[i].dispatch() {
                let from = self.gates[i].node();
                self.deliver(from, to, msg);
            }
        }
        let mut flows = Vec::with_capacity(n);
        for i in 0..n {
            let scaled = if i + 1 < n { self.gates[i + 1].outgoing } else { self.reservoir.release };
            flows.push(scaled / self.params.b_hat[i]);
        }
        for g in &mut self.gates {
            g.finish(t)?;
        }
        self.reservoir.finish(t);
        self.t += 1;
        Ok(flows)
    }
}
