use crate::error::{Error, Result};
use crate::filters::{IirCoeffs, IirFilter, LevelEstimator};
use crate::history::History;

use super::controller::StructuredController;

/// Signals of one closed-loop sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineStep {
    /// A-priori level estimates fed to the controller.
    pub estimates: Vec<f64>,
    /// Flows as computed by the controller.
    pub computed: Vec<f64>,
    /// Flows after the low-pass filter, to be applied to the plant.
    pub applied: Vec<f64>,
    /// Off-takes after the low-pass filter, as they enter the plant.
    pub offtakes: Vec<f64>,
}

/// Structured controller wrapped with per-gate level estimators and
/// low-pass filters on flows and off-takes.
#[derive(Debug, Clone)]
pub struct StructuredPipeline {
    controller: StructuredController,
    /// `None` feeds raw measurements to the controller.
    estimators: Option<Vec<LevelEstimator>>,
    u_filters: Option<Vec<IirFilter>>,
    d_filters: Option<Vec<IirFilter>>,
    u_hist: Vec<History>,
    d_hist: Vec<History>,
    started: bool,
}

impl StructuredPipeline {
    /// `kalman_gain = None` skips estimation; `filter = None` passes flows
    /// and off-takes through unchanged.
    pub fn new(controller: StructuredController, kalman_gain: Option<f64>, filter: Option<&IirCoeffs>) -> Self {
        let n = controller.len();
        let pools = controller.pools().to_vec();
        let estimators =
            kalman_gain.map(|gain| pools.iter().map(|p| LevelEstimator::new(gain, p.b, p.c, 0.0)).collect());
        let bank = |c: &IirCoeffs| (0..n).map(|_| IirFilter::new(c.clone())).collect::<Vec<_>>();
        Self {
            u_filters: filter.map(bank),
            d_filters: filter.map(bank),
            u_hist: pools.iter().map(|p| History::zeros(p.tau + p.tau_bar + 1)).collect(),
            d_hist: pools.iter().map(|p| History::zeros(p.tau_bar + 1)).collect(),
            controller,
            estimators,
            started: false,
        }
    }

    pub fn controller(&self) -> &StructuredController {
        &self.controller
    }

    pub fn controller_mut(&mut self) -> &mut StructuredController {
        &mut self.controller
    }

    /// Runs one sample: estimates from `measured`, flows from the
    /// controller, then the filters. `offtake` is the raw off-take `d[t]`.
    pub fn step(&mut self, measured: &[f64], offtake: &[f64]) -> Result<PipelineStep> {
        let n = self.controller.len();
        if measured.len() != n || offtake.len() != n {
            return Err(Error::Dimension(format!(
                "{} measurements and {} off-takes for {n} gates",
                measured.len(),
                offtake.len()
            )));
        }
        if !self.started {
            for (e, &y) in self.estimators.iter_mut().flatten().zip(measured) {
                e.reset_prior(y);
            }
            self.started = true;
        }
        let estimates: Vec<f64> = match &self.estimators {
            Some(est) => est.iter().map(LevelEstimator::prior).collect(),
            None => measured.to_vec(),
        };
        let computed = self.controller.tick(&estimates)?;
        for i in 0..n {
            self.u_hist[i].push(computed[i]);
            self.d_hist[i].push(offtake[i]);
        }
        let pools = self.controller.pools();
        for (i, est) in self.estimators.iter_mut().flatten().enumerate() {
            let p = &pools[i];
            let u_in = self.u_hist[i].lag(p.tau + p.tau_bar)?;
            let u_out = if i == 0 { 0.0 } else { self.u_hist[i - 1].lag(p.tau_bar)? };
            let d = self.d_hist[i].lag(p.tau_bar)?;
            est.update(measured[i], u_in, u_out, d);
        }
        let run = |bank: &mut Option<Vec<IirFilter>>, xs: &[f64]| -> Vec<f64> {
            match bank {
                Some(filters) => filters.iter_mut().zip(xs).map(|(f, &x)| f.step(x)).collect(),
                None => xs.to_vec(),
            }
        };
        let applied = run(&mut self.u_filters, &computed);
        let offtakes = run(&mut self.d_filters, offtake);
        Ok(PipelineStep {
            estimates,
            computed,
            applied,
            offtakes,
        })
    }
}
