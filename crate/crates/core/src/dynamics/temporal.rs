//! Temporal divergence rate and its bound against the spatial rate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::divergence::node_td_rate;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::flow::FlowField;
use crate::network::{Network, NodeId};

use super::coupling::CouplingModel;
use super::spatial::spatial_derivative_at;

/// Anything that can report `∂∇_z/∂t`.
pub trait DivergenceTrajectory {
    fn divergence_rate(&self, net: &Network, z: NodeId, t: f64) -> Result<f64>;
}

impl DivergenceTrajectory for FlowField {
    fn divergence_rate(&self, net: &Network, z: NodeId, t: f64) -> Result<f64> {
        node_td_rate(net, self, z, t)
    }
}

/// Node divergences given directly as functions of time. Nodes without a
/// profile are static.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DivergenceProfile {
    pub profiles: BTreeMap<NodeId, Expr>,
}

impl DivergenceProfile {
    pub fn new() -> Self {
        DivergenceProfile::default()
    }

    pub fn insert(&mut self, z: NodeId, divergence: Expr) -> Result<()> {
        if divergence.depends_on(Var::X) {
            return Err(Error::InvalidArgument(format!(
                "divergence profile of node {z} must depend on t only"
            )));
        }
        self.profiles.insert(z, divergence);
        Ok(())
    }
}

impl DivergenceTrajectory for DivergenceProfile {
    fn divergence_rate(&self, net: &Network, z: NodeId, t: f64) -> Result<f64> {
        net.check_node(z)?;
        Ok(self
            .profiles
            .get(&z)
            .map_or(0.0, |e| e.derivative(Var::T).at(t)))
    }
}

/// `⊞_u = Σ_{z∈𝒩_u} ∂∇_z/∂t`.
pub fn temporal_td_rate<D: DivergenceTrajectory + ?Sized>(
    net: &Network,
    trajectory: &D,
    u: NodeId,
    t: f64,
) -> Result<f64> {
    net.neighbors(u)?.iter().try_fold(0.0, |acc, &z| {
        Ok(acc + trajectory.divergence_rate(net, z, t)?)
    })
}

/// `|∂∇_u/∂t|` by the chain rule over the neighbors, next to two bounds on it.
///
/// `cs_bound` always holds. `homogeneous_bound = |□_u ⊞_u| / n` is only guaranteed
/// when the neighbor derivatives are homogeneous; `homogeneous` tells which
/// case applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalBound {
    pub node: NodeId,
    pub neighbors: usize,
    pub lhs: f64,
    pub homogeneous_bound: f64,
    pub cs_bound: f64,
    pub spatial_rate: f64,
    pub temporal_rate: f64,
    pub homogeneous: bool,
    /// `lhs − homogeneous_bound`; positive means the homogeneous bound is exceeded.
    pub homogeneous_bound_excess: f64,
}

pub fn temporal_rate_bound<D: DivergenceTrajectory + ?Sized>(
    model: &CouplingModel,
    net: &Network,
    trajectory: &D,
    u: NodeId,
    t: f64,
) -> Result<TemporalBound> {
    let nbrs = net.neighbors(u)?;
    if nbrs.is_empty() {
        return Err(Error::InvalidArgument(format!("node {u} has no neighbors")));
    }
    let mut a = Vec::with_capacity(nbrs.len());
    let mut b = Vec::with_capacity(nbrs.len());
    for &z in nbrs {
        a.push(spatial_derivative_at(model, u, z, 1, t)?);
        b.push(trajectory.divergence_rate(net, z, t)?);
    }
    Ok(bound_from_parts(u, &a, &b))
}

/// The bound record from per-neighbor `∂∇_u/∂∇_z` (`a`) and `∂∇_z/∂t` (`b`).
pub fn bound_from_parts(node: NodeId, a: &[f64], b: &[f64]) -> TemporalBound {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lhs = dot.abs();
    let homogeneous_bound = (sa * sb).abs() / n as f64;
    let same = |v: &[f64]| {
        v.iter()
            .all(|x| (x - v[0]).abs() <= 1e-12 * (1.0 + v[0].abs()))
    };
    TemporalBound {
        node,
        neighbors: n,
        lhs,
        homogeneous_bound,
        cs_bound: norm(a) * norm(b),
        spatial_rate: sa,
        temporal_rate: sb,
        homogeneous: same(a) || same(b),
        homogeneous_bound_excess: lhs - homogeneous_bound,
    }
}
