//! Multi-cell downlink trace generation.

pub mod config;
pub mod mrt;
pub mod sim;

pub use config::{db_to_linear, dbm_to_watts, linear_to_db, NetworkConfig};
pub use mrt::{effective_gain, mrt_precoder};
pub use sim::{cell_positions, simulate, TraceBundle};
