//! Low-pass filtering of commanded flows and off-takes, and the per-gate
//! scalar level estimator.

mod butterworth;
mod kalman;

pub use butterworth::{design_butterworth, IirCoeffs, IirFilter, DEFAULT_CUTOFF, SAMPLE_PERIOD};
pub use kalman::{kalman_gain, LevelEstimator, StationaryKalman};
