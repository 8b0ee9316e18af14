//! Turns routed demand into constant per-link flows.
//!
//! With unlimited capacity a node's divergence is just what it receives minus
//! what it sends, whatever the routing. `congested_flows` adds finite link
//! capacity: an overloaded link forwards only its capacity share and the
//! excess stays buffered at the upstream node, which shows up as positive
//! divergence there. `transit_limited_flows` instead caps what each switch
//! forwards on behalf of others, so backlog builds where transit traffic
//! concentrates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flow::{FlowField, FlowFn};
use crate::network::{Network, NodeId, Route};
use crate::routing::RouteTable;
use crate::throughput::split::SplitScheme;
use crate::traffic::TrafficMatrix;

fn undirected(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// `(route, rate)` for every route carrying positive demand.
fn route_rates<'a>(
    tm: &TrafficMatrix,
    routes: &'a RouteTable,
    split: &SplitScheme,
) -> Result<Vec<(&'a Route, f64)>> {
    let mut out = Vec::new();
    for (u, v, demand) in tm.demands() {
        let set = routes.get(&(u, v)).ok_or(Error::MissingRouteSet(u, v))?;
        let s = split.get(u, v).ok_or(Error::MissingRouteSet(u, v))?;
        for (r, beta) in set.routes.iter().zip(&s.betas) {
            if *beta > 0.0 {
                out.push((r, demand * beta));
            }
        }
    }
    Ok(out)
}

fn into_field(net: &Network, rates: BTreeMap<(NodeId, NodeId), f64>) -> Result<FlowField> {
    let mut field = FlowField::new();
    for ((a, b), rate) in rates {
        if rate > 0.0 {
            field.insert(net, a, b, FlowFn::constant(rate))?;
        }
    }
    Ok(field)
}

/// Offered load on every used link, both directions combined.
pub fn offered_link_loads(
    tm: &TrafficMatrix,
    routes: &RouteTable,
    split: &SplitScheme,
) -> Result<BTreeMap<(NodeId, NodeId), f64>> {
    let mut load = BTreeMap::new();
    for (r, rate) in route_rates(tm, routes, split)? {
        for w in r.nodes().windows(2) {
            *load.entry(undirected(w[0], w[1])).or_insert(0.0) += rate;
        }
    }
    Ok(load)
}

/// Demand split across routes and accumulated per directed link.
pub fn flows_from_traffic(
    net: &Network,
    tm: &TrafficMatrix,
    routes: &RouteTable,
    split: &SplitScheme,
) -> Result<FlowField> {
    let mut rates = BTreeMap::new();
    for (r, rate) in route_rates(tm, routes, split)? {
        for w in r.nodes().windows(2) {
            *rates.entry((w[0], w[1])).or_insert(0.0) += rate;
        }
    }
    into_field(net, rates)
}

/// Like `flows_from_traffic`, but each link forwards at most `capacity`
/// (both directions combined). Every route crossing an overloaded link is
/// throttled there by the same factor `capacity / load`.
pub fn congested_flows(
    net: &Network,
    tm: &TrafficMatrix,
    routes: &RouteTable,
    split: &SplitScheme,
    capacity: f64,
) -> Result<FlowField> {
    if capacity.is_nan() || capacity <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "capacity must be > 0, got {capacity}"
        )));
    }
    let load = offered_link_loads(tm, routes, split)?;
    let pass: BTreeMap<_, f64> = load
        .iter()
        .map(|(&l, &x)| (l, (capacity / x).min(1.0)))
        .collect();
    let mut rates = BTreeMap::new();
    for (r, rate) in route_rates(tm, routes, split)? {
        let mut carried = rate;
        for w in r.nodes().windows(2) {
            carried *= pass[&undirected(w[0], w[1])];
            *rates.entry((w[0], w[1])).or_insert(0.0) += carried;
        }
    }
    into_field(net, rates)
}

/// Each switch forwards at most `capacity` of transit traffic (traffic it
/// neither originates nor terminates). Every route through an overloaded
/// switch is throttled there by `capacity / transit load`.
pub fn transit_limited_flows(
    net: &Network,
    tm: &TrafficMatrix,
    routes: &RouteTable,
    split: &SplitScheme,
    capacity: f64,
) -> Result<FlowField> {
    if capacity.is_nan() || capacity <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "capacity must be > 0, got {capacity}"
        )));
    }
    let routed = route_rates(tm, routes, split)?;
    let mut transit = vec![0.0; net.node_count()];
    for (r, rate) in &routed {
        let nodes = r.nodes();
        for &w in &nodes[1..nodes.len() - 1] {
            transit[w] += rate;
        }
    }
    let pass: Vec<f64> = transit
        .iter()
        .map(|&x| if x > capacity { capacity / x } else { 1.0 })
        .collect();
    let mut rates = BTreeMap::new();
    for (r, rate) in routed {
        let mut carried = rate;
        for (k, w) in r.nodes().windows(2).enumerate() {
            if k > 0 {
                carried *= pass[w[0]];
            }
            *rates.entry((w[0], w[1])).or_insert(0.0) += carried;
        }
    }
    into_field(net, rates)
}
