//! Pool dynamics and network assembly.
//!
//! Two pool models are provided: the third-order recursion used as the
//! simulation plant, and the first-order delayed integrator used for
//! synthesis. Both are stepped from explicit lag buffers.

mod network;
mod params;
mod state;

pub use network::{build_network, pool_models, ModelOrder, NetworkKind, NetworkModel, Plant, PoolParams};
pub use params::{
    DesignDelays, FirstOrderPoolParams, ParamTable, PoolModel, TableRow, ThirdOrderPoolParams,
    DEFAULT_TABLE,
};
pub use state::{
    dc_slope_first_order, dc_slope_third_order, step_first_order, step_third_order, FlowChannel,
    PoolSimState,
};
