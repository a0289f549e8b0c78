//! Simulation and control of irrigation canal strings.
//!
//! The central piece is [`structured`], an LQ-optimal controller for
//! first-order pool dynamics that runs as one serial sweep of scalar
//! messages along the string each sample. [`lq`] holds the centralized
//! third-order comparison controller and the dense oracle, [`baseline_p`]
//! the proportional baseline, and [`harness`] the closed-loop experiments.

pub mod baseline_p;
pub mod error;
pub mod filters;
pub mod harness;
pub mod history;
pub mod ident;
pub mod lq;
pub mod plant;
pub mod structured;
pub mod weights;

pub use error::{Error, Result};
pub use weights::CostWeights;
