//! Congestion-avoiding minimum-hop routing.
//!
//! Candidate next hops are the neighbors one step closer to the target; among
//! them the router prefers nodes whose neighborhood carries the least
//! absolute divergence. `route_set` enumerates every minimum-hop route and
//! keeps the ones whose divergence score is within a relative slack of the
//! best.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::all_node_td;
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::network::{Network, NodeId, Route};
use crate::FORMAT_TAG;

pub const DEFAULT_DELTA: f64 = 0.25;
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000;

/// Ties between float scores closer than this (relative) count as equal.
const SCORE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    #[default]
    Bfs,
    /// Smallest `n` with `(Aⁿ)_uv > 0`.
    AdjacencyPower,
}

/// Hop distance from every node to `target`; `None` when unreachable.
pub fn bfs_distances(net: &Network, target: NodeId) -> Result<Vec<Option<usize>>> {
    net.check_node(target)?;
    let mut dist = vec![None; net.node_count()];
    dist[target] = Some(0);
    let mut queue = VecDeque::from([target]);
    while let Some(w) = queue.pop_front() {
        let d = dist[w].expect("queued nodes have a distance");
        for &z in net.adj(w) {
            if dist[z].is_none() {
                dist[z] = Some(d + 1);
                queue.push_back(z);
            }
        }
    }
    Ok(dist)
}

/// All-pairs hop distances.
pub fn distance_matrix(net: &Network, mode: DistanceMode) -> Vec<Vec<Option<usize>>> {
    match mode {
        DistanceMode::Bfs => net
            .nodes()
            .map(|v| bfs_distances(net, v).expect("node in range"))
            .collect(),
        DistanceMode::AdjacencyPower => {
            let n = net.node_count();
            let mut dist = vec![vec![None; n]; n];
            for (u, row) in dist.iter_mut().enumerate() {
                row[u] = Some(0);
            }
            if n < 2 {
                return dist;
            }
            let mut power = net.adjacency_matrix();
            let mut unresolved = n * (n - 1);
            for hops in 1..n {
                for u in 0..n {
                    for v in 0..n {
                        if dist[u][v].is_none() && power[u][v] > 0 {
                            dist[u][v] = Some(hops);
                            unresolved -= 1;
                        }
                    }
                }
                if unresolved == 0 || hops + 1 == n {
                    break;
                }
                power = net.mul_by_adjacency(&power);
            }
            dist
        }
    }
}

pub fn min_hops(net: &Network, u: NodeId, v: NodeId) -> Result<usize> {
    min_hops_mode(net, u, v, DistanceMode::Bfs)
}

pub fn min_hops_mode(net: &Network, u: NodeId, v: NodeId, mode: DistanceMode) -> Result<usize> {
    net.check_node(u)?;
    net.check_node(v)?;
    if u == v {
        return Err(Error::InvalidArgument(
            "source and target must differ".into(),
        ));
    }
    let d = match mode {
        DistanceMode::Bfs => bfs_distances(net, v)?[u],
        DistanceMode::AdjacencyPower => {
            let mut found = None;
            let mut power = net.adjacency_matrix();
            for hops in 1..net.node_count() {
                if power[u][v] > 0 {
                    found = Some(hops);
                    break;
                }
                power = net.mul_by_adjacency(&power);
            }
            found
        }
    };
    d.ok_or(Error::NoRoute(u, v))
}

/// `L(x) = Σ_{z∈𝒩_x} |∇_z| + |∇_x|`.
pub fn neighborhood_load(net: &Network, td: &[f64], x: NodeId) -> f64 {
    net.adj(x).iter().map(|&z| td[z].abs()).sum::<f64>() + td[x].abs()
}

/// `S(ρ) = Σ_{w∈ρ} |∇_w|`.
pub fn route_score(td: &[f64], route: &Route) -> f64 {
    route.nodes().iter().map(|&w| td[w].abs()).sum()
}

fn check_td(net: &Network, td: &[f64]) -> Result<()> {
    if td.len() != net.node_count() {
        return Err(Error::InvalidArgument(format!(
            "expected {} node divergences, got {}",
            net.node_count(),
            td.len()
        )));
    }
    Ok(())
}

fn distances_to(net: &Network, u: NodeId, v: NodeId) -> Result<Vec<Option<usize>>> {
    net.check_node(u)?;
    if u == v {
        return Err(Error::InvalidArgument(
            "source and target must differ".into(),
        ));
    }
    let dist = bfs_distances(net, v)?;
    if dist[u].is_none() {
        return Err(Error::NoRoute(u, v));
    }
    Ok(dist)
}

fn closer<'a>(
    net: &'a Network,
    dist: &'a [Option<usize>],
    w: NodeId,
) -> impl Iterator<Item = NodeId> + 'a {
    let d = dist[w].expect("on a shortest path");
    net.adj(w)
        .iter()
        .copied()
        .filter(move |&x| dist[x] == Some(d - 1))
}

/// Greedy congestion-avoiding route from precomputed node divergences.
pub fn route_greedy_with(net: &Network, td: &[f64], u: NodeId, v: NodeId) -> Result<Route> {
    check_td(net, td)?;
    let dist = distances_to(net, u, v)?;
    let mut nodes = vec![u];
    let mut w = u;
    while w != v {
        let mut best: Option<(f64, NodeId)> = None;
        for x in closer(net, &dist, w) {
            let load = neighborhood_load(net, td, x);
            // ascending ids, so strict < keeps the smallest id on ties
            if best.is_none_or(|(b, _)| load < b) {
                best = Some((load, x));
            }
        }
        w = best.expect("a closer neighbor exists on a shortest path").1;
        nodes.push(w);
    }
    Ok(Route::from_valid(nodes))
}

pub fn route_greedy(
    net: &Network,
    field: &FlowField,
    u: NodeId,
    v: NodeId,
    t: f64,
) -> Result<Route> {
    let td = all_node_td(net, field, t)?;
    route_greedy_with(net, &td, u, v)
}

/// The lexicographically smallest minimum-hop route; ignores traffic.
pub fn hop_only_route(net: &Network, u: NodeId, v: NodeId) -> Result<Route> {
    let dist = distances_to(net, u, v)?;
    let mut nodes = vec![u];
    let mut w = u;
    while w != v {
        w = closer(net, &dist, w)
            .next()
            .expect("a closer neighbor exists");
        nodes.push(w);
    }
    Ok(Route::from_valid(nodes))
}

/// Number of minimum-hop routes from `u` to `v`, saturating.
pub fn count_min_hop_routes(net: &Network, u: NodeId, v: NodeId) -> Result<u64> {
    let dist = distances_to(net, u, v)?;
    let mut order: Vec<NodeId> = net.nodes().filter(|&x| dist[x].is_some()).collect();
    order.sort_by_key(|&x| dist[x]);
    let mut paths = vec![0u64; net.node_count()];
    paths[v] = 1;
    for &w in order.iter().skip(1) {
        paths[w] = closer(net, &dist, w).fold(0u64, |acc, x| acc.saturating_add(paths[x]));
    }
    Ok(paths[u])
}

/// Every minimum-hop route in lexicographic order, refusing to enumerate more
/// than `cap`.
pub fn enumerate_min_hop_routes(
    net: &Network,
    u: NodeId,
    v: NodeId,
    cap: u64,
) -> Result<Vec<Route>> {
    let count = count_min_hop_routes(net, u, v)?;
    if count > cap {
        return Err(Error::EnumerationCapExceeded { count, cap });
    }
    let dist = distances_to(net, u, v)?;
    let mut out = Vec::with_capacity(count as usize);
    let mut stack = vec![u];
    fn dfs(
        net: &Network,
        dist: &[Option<usize>],
        v: NodeId,
        stack: &mut Vec<NodeId>,
        out: &mut Vec<Route>,
    ) {
        let w = *stack.last().expect("non-empty");
        if w == v {
            out.push(Route::from_valid(stack.clone()));
            return;
        }
        for x in closer(net, dist, w) {
            stack.push(x);
            dfs(net, dist, v, stack, out);
            stack.pop();
        }
    }
    dfs(net, &dist, v, &mut stack, &mut out);
    Ok(out)
}

/// Minimum-hop routes between two nodes that pass the divergence filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSet {
    pub source: NodeId,
    pub target: NodeId,
    pub hop_count: usize,
    pub routes: Vec<Route>,
    /// `S(ρ)` per route, aligned with `routes`.
    pub scores: Vec<f64>,
}

impl RouteSet {
    pub fn singleton(route: Route, td: &[f64]) -> Self {
        RouteSet {
            source: route.source(),
            target: route.target(),
            hop_count: route.len(),
            scores: vec![route_score(td, &route)],
            routes: vec![route],
        }
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&RouteSetFile {
            format: FORMAT_TAG.to_string(),
            route_set: self.clone(),
        })?)
    }

    pub fn from_json(src: &str, net: &Network) -> Result<Self> {
        let file: RouteSetFile = serde_json::from_str(src)?;
        if file.format != FORMAT_TAG {
            return Err(Error::Format(format!(
                "expected format '{FORMAT_TAG}', found '{}'",
                file.format
            )));
        }
        let set = file.route_set;
        if set.scores.len() != set.routes.len() {
            return Err(Error::Format("scores and routes differ in length".into()));
        }
        for r in &set.routes {
            let r = Route::new(net, r.nodes().to_vec())?;
            if r.source() != set.source || r.target() != set.target || r.len() != set.hop_count {
                return Err(Error::InvalidRoute(format!(
                    "{:?} does not match the set",
                    r.nodes()
                )));
            }
        }
        Ok(set)
    }

    pub fn load(path: &Path, net: &Network) -> Result<Self> {
        RouteSet::from_json(&std::fs::read_to_string(path)?, net)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RouteSetFile {
    format: String,
    route_set: RouteSet,
}

/// Minimum-hop routes with `S(ρ) ≤ (1 + δ)·min S`, from precomputed divergences.
pub fn route_set_with(
    net: &Network,
    td: &[f64],
    u: NodeId,
    v: NodeId,
    delta: f64,
    cap: u64,
) -> Result<RouteSet> {
    check_td(net, td)?;
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must be >= 0, got {delta}"
        )));
    }
    let all = enumerate_min_hop_routes(net, u, v, cap)?;
    let scored: Vec<(Route, f64)> = all
        .into_iter()
        .map(|r| {
            let s = route_score(td, &r);
            (r, s)
        })
        .collect();
    let best = scored.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
    let limit = if delta.is_infinite() {
        f64::INFINITY
    } else {
        (1.0 + delta) * best + SCORE_TIE * best.max(1.0)
    };
    let (routes, scores): (Vec<_>, Vec<_>) =
        scored.into_iter().filter(|(_, s)| *s <= limit).unzip();
    Ok(RouteSet {
        source: u,
        target: v,
        hop_count: routes[0].len(),
        routes,
        scores,
    })
}

pub fn route_set(
    net: &Network,
    field: &FlowField,
    u: NodeId,
    v: NodeId,
    t: f64,
    delta: f64,
) -> Result<RouteSet> {
    let td = all_node_td(net, field, t)?;
    route_set_with(net, &td, u, v, delta, DEFAULT_ENUMERATION_CAP)
}

/// How to pick routes for every demanded pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "router", rename_all = "kebab-case")]
pub enum Router {
    /// Divergence-filtered route sets.
    TdAware { delta: f64, cap: u64 },
    /// One greedy congestion-avoiding route per pair.
    Greedy,
    /// One divergence-blind route per pair, smallest ids first.
    HopOnly,
}

impl Router {
    pub fn td_aware() -> Self {
        Router::TdAware {
            delta: DEFAULT_DELTA,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn route(&self, net: &Network, td: &[f64], u: NodeId, v: NodeId) -> Result<RouteSet> {
        match *self {
            Router::TdAware { delta, cap } => route_set_with(net, td, u, v, delta, cap),
            Router::Greedy => Ok(RouteSet::singleton(route_greedy_with(net, td, u, v)?, td)),
            Router::HopOnly => Ok(RouteSet::singleton(hop_only_route(net, u, v)?, td)),
        }
    }
}

pub type RouteTable = BTreeMap<(NodeId, NodeId), RouteSet>;

/// Routes for every ordered pair in `pairs`, computed in parallel.
pub fn route_pairs(
    net: &Network,
    td: &[f64],
    pairs: &[(NodeId, NodeId)],
    router: Router,
) -> Result<RouteTable> {
    check_td(net, td)?;
    let sets = pairs
        .par_iter()
        .map(|&(u, v)| router.route(net, td, u, v).map(|s| ((u, v), s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(sets.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4() -> Network {
        Network::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn hop_counts() {
        let path = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        let tri = Network::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let split = Network::new(4, &[(0, 1), (2, 3)]).unwrap();
        for mode in [DistanceMode::Bfs, DistanceMode::AdjacencyPower] {
            assert_eq!(min_hops_mode(&path, 0, 2, mode).unwrap(), 2);
            assert_eq!(min_hops_mode(&tri, 0, 2, mode).unwrap(), 1);
            assert_eq!(min_hops_mode(&split, 0, 3, mode), Err(Error::NoRoute(0, 3)));
        }
        assert_eq!(
            distance_matrix(&cycle4(), DistanceMode::Bfs),
            distance_matrix(&cycle4(), DistanceMode::AdjacencyPower)
        );
    }

    #[test]
    fn greedy_avoids_loaded_side() {
        let net = cycle4();
        // |∇_1| = 1 and |∇_3| = 5: L(1) = 0 + 0 + 1 < L(3) = 5
        let td = [0.0, 1.0, 0.0, -5.0];
        assert_eq!(
            route_greedy_with(&net, &td, 0, 2).unwrap().nodes(),
            &[0, 1, 2]
        );
        let td = [0.0, 5.0, 0.0, 1.0];
        assert_eq!(
            route_greedy_with(&net, &td, 0, 2).unwrap().nodes(),
            &[0, 3, 2]
        );
        let zero = [0.0; 4];
        assert_eq!(
            route_greedy_with(&net, &zero, 0, 2).unwrap().nodes(),
            &[0, 1, 2]
        );
        assert_eq!(hop_only_route(&net, 2, 0).unwrap().nodes(), &[2, 1, 0]);
    }

    #[test]
    fn route_sets_on_cycle() {
        let net = cycle4();
        let zero = [0.0; 4];
        let set = route_set_with(&net, &zero, 0, 2, 0.0, 100).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.routes[0].nodes(), &[0, 1, 2]);
        let td = [1.0, 2.0, 1.0, 3.0];
        let set = route_set_with(&net, &td, 0, 2, 0.0, 100).unwrap();
        assert_eq!(set.routes.len(), 1);
        assert_eq!(set.scores, vec![4.0]);
        let set = route_set_with(&net, &td, 0, 2, f64::INFINITY, 100).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(
            route_set_with(&net, &td, 0, 2, 0.0, 1),
            Err(Error::EnumerationCapExceeded { count: 2, cap: 1 })
        );
    }

    #[test]
    fn path_graph_has_one_route() {
        let net = Network::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let td = [3.0, -1.0, 2.0, 0.5];
        let set = route_set_with(&net, &td, 0, 3, 0.0, 10).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(route_greedy_with(&net, &td, 0, 3).unwrap(), set.routes[0]);
    }

    #[test]
    fn json_round_trip() {
        let net = cycle4();
        let set = route_set_with(&net, &[0.0; 4], 0, 2, 0.0, 10).unwrap();
        let text = set.to_json().unwrap();
        assert_eq!(RouteSet::from_json(&text, &net).unwrap(), set);
        assert_eq!(set.to_json().unwrap(), text);
    }
}
