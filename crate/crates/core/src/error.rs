use thiserror::Error;

use crate::network::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node {0} not found")]
    NodeNotFound(NodeId),
    #[error("nodes {0} and {1} are not adjacent")]
    NotAdjacent(NodeId, NodeId),
    #[error("invalid hop count {n}: must lie in 1..={max}")]
    InvalidHopCount { n: usize, max: usize },
    #[error("flow {from}->{to} is negative at t={t}: {value}")]
    FlowNegative {
        from: NodeId,
        to: NodeId,
        t: f64,
        value: f64,
    },
    #[error("flow {from}->{to} exceeds declared bound {bound} at t={t}: {value}")]
    FlowBoundExceeded {
        from: NodeId,
        to: NodeId,
        t: f64,
        value: f64,
        bound: f64,
    },
    #[error("flow {from}->{to} has no time derivative (tabulated series)")]
    NonDifferentiableFlow { from: NodeId, to: NodeId },
    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("no coupling declared between {0} and {1}")]
    NoCoupling(NodeId, NodeId),
    #[error("coupling between {0} and {1} has zero derivative; inverse undefined")]
    SingularCoupling(NodeId, NodeId),
    #[error("spatial rate of node {0} is zero")]
    ZeroDenominatorRate(NodeId),
    #[error("no route from {0} to {1}")]
    NoRoute(NodeId, NodeId),
    #[error("{count} min-hop routes exceed enumeration cap {cap}")]
    EnumerationCapExceeded { count: u64, cap: u64 },
    #[error("no simple graph with this degree sequence found: {0}")]
    InfeasibleDegreeSequence(String),
    #[error("fat-tree arity {0} must be even and >= 2")]
    OddK(usize),
    #[error("ring backbone needs at least 3 nodes, got {0}")]
    BackboneTooSmall(usize),
    #[error("sinkhorn did not converge: residual {residual}")]
    SinkhornNonConvergence { residual: f64 },
    #[error("no route set for demand {0}->{1}")]
    MissingRouteSet(NodeId, NodeId),
    #[error("throughput bracket is not positive: {bracket}")]
    NonPositiveBracket { bracket: f64 },
    #[error("multi-commodity flow program is infeasible")]
    LpInfeasible,
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("plan infeasible; most violated constraint {constraint} by {violation}")]
    Infeasible { constraint: String, violation: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
