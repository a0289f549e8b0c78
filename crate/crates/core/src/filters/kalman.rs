use crate::error::{invalid, Result};

/// Stationary solution of the scalar filtering Riccati equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryKalman {
    /// Fixed point `P` of `P = P - P^2/(P + R2) + R1`.
    pub variance: f64,
    /// Measurement-update gain `P / (P + R2)`.
    pub gain: f64,
}

/// `R1` is the process-noise variance, `R2` the measurement-noise variance.
pub fn kalman_gain(r1: f64, r2: f64) -> Result<StationaryKalman> {
    if !(r1 >= 0.0 && r2 >= 0.0) || !r1.is_finite() || !r2.is_finite() {
        return Err(invalid("R1/R2", "variances must be finite and non-negative"));
    }
    if r1 == 0.0 && r2 == 0.0 {
        return Err(invalid("R1/R2", "at least one variance must be positive"));
    }
    let variance = 0.5 * (r1 + (r1 * r1 + 4.0 * r1 * r2).sqrt());
    let gain = if r2 == 0.0 { 1.0 } else { variance / (variance + r2) };
    Ok(StationaryKalman { variance, gain })
}

/// One pool's level estimator running on the first-order model.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimator {
    pub gain: f64,
    pub b: f64,
    pub c: f64,
    prior: f64,
}

impl LevelEstimator {
    pub fn new(gain: f64, b: f64, c: f64, initial_prior: f64) -> Self {
        Self {
            gain,
            b,
            c,
            prior: initial_prior,
        }
    }

    /// Estimate `y_{t|t-1}` used by the controller at `t`.
    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn reset_prior(&mut self, value: f64) {
        self.prior = value;
    }

    /// Measurement correction followed by the model prediction. The lagged
    /// flows are `u_i[t-tau-tau_bar]`, `u_{i-1}[t-tau_bar]`, `d_i[t-tau_bar]`.
    /// Returns `(y_{t|t}, y_{t+1|t})`.
    pub fn update(&mut self, measured: f64, u_in_lagged: f64, u_out_lagged: f64, d_lagged: f64) -> (f64, f64) {
        let posterior = self.prior + self.gain * (measured - self.prior);
        self.prior = posterior + self.b * u_in_lagged - self.c * (u_out_lagged - d_lagged);
        (posterior, self.prior)
    }
}
