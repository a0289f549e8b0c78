//! Centralized LQ control of the third-order network and the lifted
//! first-order reference problem.

mod controller;
mod dare;
mod feedforward;
pub(crate) mod linalg;
mod oracle;
mod state_space;

pub use controller::CentralLq;
pub use dare::{
    closed_loop_radius, lq_solution, solve_dare, LqSolution, DARE_ITERATION_CAP, DARE_RESIDUAL_BOUND,
    DARE_TOLERANCE,
};
pub use feedforward::feedforward_pi;
pub use oracle::{lifted_first_order_oracle, LiftedModel, OracleHorizon, ORACLE_MAX_STATES, ORACLE_MAX_STEPS};
pub use state_space::{assemble_state_space, PoolBlock, QuadraticCost, StateSpaceModel};
