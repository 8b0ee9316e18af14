//! Throughput estimation, its LP reference and the experiment drivers.

pub mod estimate;
pub mod experiment;
pub mod lp;
pub mod split;

pub use estimate::{
    balanced_theta, classify, estimate_from_split, estimate_throughput, port_accounting,
    transient_balance, FrozenThroughput, PairTerm, ThroughputEstimate, TopologyClass,
    TransientBalance,
};
pub use lp::{lp_oracle_capacities, lp_oracle_throughput};
pub use split::{PairSplit, SplitScheme, DEFAULT_FLOOR};
