//! Structured LQ control of a string of first-order pools.
//!
//! Gate `i` sits at the inflow of pool `i`; the reservoir agent sits above
//! gate `N`. Each sample the gates shift their disturbance aggregates
//! downstream, sweep `m_i` and changed aggregates upstream, and send the
//! resulting flows back down.

mod controller;
mod messages;
mod params;
mod pipeline;

pub use controller::StructuredController;
pub use messages::{LoggedMessage, MessageLog, Node, SweepMessage};
pub use params::{compute_params, ControlParams};
pub use pipeline::{PipelineStep, StructuredPipeline};
