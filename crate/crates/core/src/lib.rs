//! Traffic divergence analysis for networks.

pub mod cli;
pub mod divergence;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod flow;
pub mod materialize;
pub mod network;
pub mod planner;
pub mod routing;
pub mod throughput;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
pub use expr::Expr;
pub use flow::{EvalMode, FlowField, FlowFn};
pub use network::{Network, NodeId, Role, Route, SwitchSpec};

/// Version tag carried by every JSON file the crate reads or writes.
pub const FORMAT_TAG: &str = "tdnet-v1";
