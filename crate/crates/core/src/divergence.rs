//! Node, link and route traffic divergence: inflow minus outflow across the
//! boundary of a node set.
//!
//! Link and route divergences are evaluated from their own boundary sums,
//! not by adding node divergences; the factorization identities are
//! properties checked in tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::flow::{EvalMode, FlowField, FlowFn};
use crate::network::{Network, NodeId, Route};

/// Net boundary flow into the node set `members` (sorted ascending).
fn boundary_divergence(
    net: &Network,
    field: &FlowField,
    members: &[NodeId],
    t: f64,
    mode: EvalMode,
) -> Result<f64> {
    let inside = |z: &NodeId| members.binary_search(z).is_ok();
    let mut total = 0.0;
    for &w in members {
        for &z in net.adj(w) {
            if inside(&z) {
                continue;
            }
            total += field.evaluate_mode(net, z, w, t, mode)?;
            total -= field.evaluate_mode(net, w, z, t, mode)?;
        }
    }
    Ok(total)
}

pub fn node_td(net: &Network, field: &FlowField, u: NodeId, t: f64) -> Result<f64> {
    node_td_mode(net, field, u, t, EvalMode::Instantaneous)
}

pub fn node_td_mode(
    net: &Network,
    field: &FlowField,
    u: NodeId,
    t: f64,
    mode: EvalMode,
) -> Result<f64> {
    net.check_node(u)?;
    boundary_divergence(net, field, &[u], t, mode)
}

/// Divergence of every node, indexed by node id.
pub fn all_node_td(net: &Network, field: &FlowField, t: f64) -> Result<Vec<f64>> {
    net.nodes().map(|u| node_td(net, field, u, t)).collect()
}

pub fn link_td(net: &Network, field: &FlowField, u: NodeId, v: NodeId, t: f64) -> Result<f64> {
    link_td_mode(net, field, u, v, t, EvalMode::Instantaneous)
}

pub fn link_td_mode(
    net: &Network,
    field: &FlowField,
    u: NodeId,
    v: NodeId,
    t: f64,
    mode: EvalMode,
) -> Result<f64> {
    net.check_node(u)?;
    net.check_node(v)?;
    if !net.is_adjacent(u, v) {
        return Err(Error::NotAdjacent(u, v));
    }
    let members = if u < v { [u, v] } else { [v, u] };
    boundary_divergence(net, field, &members, t, mode)
}

pub fn route_td(net: &Network, field: &FlowField, route: &Route, t: f64) -> Result<f64> {
    route_td_mode(net, field, route, t, EvalMode::Instantaneous)
}

pub fn route_td_mode(
    net: &Network,
    field: &FlowField,
    route: &Route,
    t: f64,
    mode: EvalMode,
) -> Result<f64> {
    // Revalidate: the route may come from a different network.
    let route = Route::new(net, route.nodes().to_vec())?;
    let mut members = route.nodes().to_vec();
    members.sort_unstable();
    boundary_divergence(net, field, &members, t, mode)
}

/// Boundary divergence of `members` as an expression in `t`. Flow signs are
/// not checked; tabulated series have no symbolic form.
fn boundary_expr(net: &Network, field: &FlowField, members: &[NodeId]) -> Result<Expr> {
    let flow = |a: NodeId, b: NodeId| match field.get(a, b) {
        None => Ok(Expr::Const(0.0)),
        Some(FlowFn::Expr(e)) => Ok(e.clone()),
        Some(FlowFn::Series(_)) => Err(Error::NonDifferentiableFlow { from: a, to: b }),
    };
    let mut total = Expr::Const(0.0);
    for &w in members {
        for &z in net.adj(w) {
            if members.binary_search(&z).is_ok() {
                continue;
            }
            total = expr::add(total, expr::sub(flow(z, w)?, flow(w, z)?));
        }
    }
    Ok(total)
}

/// `∇_u` as a symbolic function of time.
pub fn node_td_expr(net: &Network, field: &FlowField, u: NodeId) -> Result<Expr> {
    net.check_node(u)?;
    boundary_expr(net, field, &[u])
}

pub fn link_td_expr(net: &Network, field: &FlowField, u: NodeId, v: NodeId) -> Result<Expr> {
    net.check_node(u)?;
    net.check_node(v)?;
    if !net.is_adjacent(u, v) {
        return Err(Error::NotAdjacent(u, v));
    }
    boundary_expr(net, field, &if u < v { [u, v] } else { [v, u] })
}

pub fn route_td_expr(net: &Network, field: &FlowField, route: &Route) -> Result<Expr> {
    let route = Route::new(net, route.nodes().to_vec())?;
    let mut members = route.nodes().to_vec();
    members.sort_unstable();
    boundary_expr(net, field, &members)
}

/// Time derivative of a node's divergence from the symbolic flow derivatives.
pub fn node_td_rate(net: &Network, field: &FlowField, u: NodeId, t: f64) -> Result<f64> {
    net.check_node(u)?;
    let mut total = 0.0;
    for &z in net.adj(u) {
        total += field.rate_derivative(net, z, u, t)?;
        total -= field.rate_derivative(net, u, z, t)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDivergence {
    pub u: NodeId,
    pub v: NodeId,
    pub td: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDivergence {
    pub route: Route,
    pub td: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub evaluated_at: f64,
    pub mode: EvalMode,
    pub node_td: BTreeMap<NodeId, f64>,
    pub link_td: Vec<LinkDivergence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub route_td: Vec<RouteDivergence>,
}

impl DivergenceReport {
    pub fn compute(
        net: &Network,
        field: &FlowField,
        t: f64,
        mode: EvalMode,
        routes: &[Route],
    ) -> Result<Self> {
        let node_td = net
            .nodes()
            .map(|u| node_td_mode(net, field, u, t, mode).map(|d| (u, d)))
            .collect::<Result<_>>()?;
        let link_td = net
            .links()
            .into_iter()
            .map(|(u, v)| {
                link_td_mode(net, field, u, v, t, mode).map(|td| LinkDivergence { u, v, td })
            })
            .collect::<Result<_>>()?;
        let route_td = routes
            .iter()
            .map(|r| {
                route_td_mode(net, field, r, t, mode).map(|td| RouteDivergence {
                    route: r.clone(),
                    td,
                })
            })
            .collect::<Result<_>>()?;
        Ok(DivergenceReport {
            evaluated_at: t,
            mode,
            node_td,
            link_td,
            route_td,
        })
    }

    pub fn total(&self) -> f64 {
        self.node_td.values().sum()
    }
}
