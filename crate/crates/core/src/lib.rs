//! Cycle-approximate simulator and functional model of a multi-channel
//! graph processing accelerator.

pub mod accumulator;
pub mod core_sim;
pub mod crossbar;
pub mod engine;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod partition;
pub mod udf;
pub mod verify;

pub use error::{Error, Result};
