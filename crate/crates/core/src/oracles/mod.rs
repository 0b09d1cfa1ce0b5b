//! Independent reference computations used to validate the collocation
//! pipeline.

pub mod mc;
pub mod ode;

pub use mc::{
    default_safe_barrier, simulate_gs, simulate_gs_many, McConfig, McEstimate, DEFAULT_MAX_EVENTS,
};
pub use ode::{exponential_ode_oracle, exponential_rate, OdeOracle};
