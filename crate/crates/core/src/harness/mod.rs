//! Closed-loop experiments on the third-order plant: scenarios, cost
//! evaluation, parameter sweeps.

mod run;
mod scenario;
mod sweeps;
mod trace;

pub use run::{run_scenario, run_scenario_with, run_structured_logged};
pub use scenario::{
    disturbance_scenario, setpoint_scenario, time_response_scenario, ControllerKind, DesignSpec, DisturbanceSpec,
    KalmanSpec, PSpec, PerPool, Scenario, WeightSpec,
};
pub use sweeps::{
    sweep_disturbance_location, sweep_network_size, sweep_tradeoff, write_sweep_csv, write_tradeoff_csv,
    SizeSweepKind, SweepRow, TradeoffGrid, TradeoffKnob, TradeoffPoint,
};
pub use trace::{cost_series, evaluate_cost, CostBreakdown, SimTrace};
