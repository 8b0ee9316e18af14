//! Undirected network substrate: nodes, links, neighbor sets, adjacency
//! powers and routes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::FORMAT_TAG;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Switch,
    Server,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSpec {
    /// Physical port count.
    pub radix: usize,
    /// Disabled ports.
    #[serde(rename = "outage")]
    pub outage_ports: usize,
    /// Attached servers.
    pub servers: usize,
}

impl SwitchSpec {
    pub fn new(radix: usize, outage_ports: usize, servers: usize) -> Self {
        SwitchSpec {
            radix,
            outage_ports,
            servers,
        }
    }
}

/// An undirected simple graph over dense node ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_count: usize,
    adjacency: Vec<BTreeSet<NodeId>>,
    roles: BTreeMap<NodeId, Role>,
    switch_spec: BTreeMap<NodeId, SwitchSpec>,
}

impl Network {
    /// Builds a network of `node_count` switches (roles default to switch).
    pub fn new(node_count: usize, links: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut net = Network {
            node_count,
            adjacency: vec![BTreeSet::new(); node_count],
            roles: (0..node_count).map(|u| (u, Role::Switch)).collect(),
            switch_spec: BTreeMap::new(),
        };
        for &(u, v) in links {
            net.add_link(u, v)?;
        }
        Ok(net)
    }

    pub fn add_link(&mut self, u: NodeId, v: NodeId) -> Result<()> {
        if u == v {
            return Err(Error::InvalidNetwork(format!("self-loop at node {u}")));
        }
        self.check_node(u)?;
        self.check_node(v)?;
        self.adjacency[u].insert(v);
        self.adjacency[v].insert(u);
        Ok(())
    }

    pub fn set_role(&mut self, u: NodeId, role: Role) -> Result<()> {
        self.check_node(u)?;
        self.roles.insert(u, role);
        if role == Role::Server {
            self.switch_spec.remove(&u);
        }
        Ok(())
    }

    pub fn set_switch_spec(&mut self, u: NodeId, spec: SwitchSpec) -> Result<()> {
        self.check_node(u)?;
        if self.roles.get(&u) != Some(&Role::Switch) {
            return Err(Error::InvalidNetwork(format!("node {u} is not a switch")));
        }
        let switch_links = self.switch_degree(u);
        if spec.radix < spec.outage_ports + spec.servers + switch_links {
            return Err(Error::InvalidNetwork(format!(
                "switch {u}: radix {} < outage {} + servers {} + links {switch_links}",
                spec.radix, spec.outage_ports, spec.servers
            )));
        }
        self.switch_spec.insert(u, spec);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.node_count
    }

    pub fn contains(&self, u: NodeId) -> bool {
        u < self.node_count
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::NodeNotFound(u))
        }
    }

    /// Neighbor set of `u` in ascending id order.
    pub fn neighbors(&self, u: NodeId) -> Result<&BTreeSet<NodeId>> {
        self.check_node(u)?;
        Ok(&self.adjacency[u])
    }

    /// Unchecked neighbor iteration for hot loops over known-valid ids.
    pub(crate) fn adj(&self, u: NodeId) -> &BTreeSet<NodeId> {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency.get(u).map_or(0, BTreeSet::len)
    }

    pub fn is_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency.get(u).is_some_and(|s| s.contains(&v))
    }

    /// Links as `(u, v)` with `u < v`, sorted.
    pub fn links(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for u in self.nodes() {
            for &v in &self.adjacency[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn link_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn role(&self, u: NodeId) -> Option<Role> {
        self.roles.get(&u).copied()
    }

    pub fn switches(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|u| self.role(*u) == Some(Role::Switch))
            .collect()
    }

    pub fn switch_spec(&self, u: NodeId) -> Option<&SwitchSpec> {
        self.switch_spec.get(&u)
    }

    /// Number of links from `u` to other switches.
    pub fn switch_degree(&self, u: NodeId) -> usize {
        self.adjacency.get(u).map_or(0, |s| {
            s.iter()
                .filter(|z| self.role(**z) == Some(Role::Switch))
                .count()
        })
    }

    /// Number of switch-to-switch links.
    pub fn switch_link_count(&self) -> usize {
        self.links()
            .into_iter()
            .filter(|(u, v)| {
                self.role(*u) == Some(Role::Switch) && self.role(*v) == Some(Role::Switch)
            })
            .count()
    }

    /// Dense symmetric 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.node_count;
        let mut a = vec![vec![0u64; n]; n];
        for u in 0..n {
            for &v in &self.adjacency[u] {
                a[u][v] = 1;
            }
        }
        a
    }

    /// `A^n` by repeated integer multiplication; entry `(u, v)` counts
    /// `n`-hop walks. Counts saturate at `u64::MAX`.
    pub fn adjacency_power(&self, n: usize) -> Result<Vec<Vec<u64>>> {
        let max = self.node_count.saturating_sub(1);
        if n == 0 || n > max {
            return Err(Error::InvalidHopCount { n, max });
        }
        let a = self.adjacency_matrix();
        let mut p = a.clone();
        for _ in 1..n {
            p = self.mul_by_adjacency(&p);
        }
        Ok(p)
    }

    /// `m * A`, exploiting the sparsity of `A`.
    pub(crate) fn mul_by_adjacency(&self, m: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let n = self.node_count;
        let mut out = vec![vec![0u64; n]; n];
        for (row_in, row_out) in m.iter().zip(out.iter_mut()) {
            for (k, &mik) in row_in.iter().enumerate() {
                if mik == 0 {
                    continue;
                }
                for &j in &self.adjacency[k] {
                    row_out[j] = row_out[j].saturating_add(mik);
                }
            }
        }
        out
    }

    /// Connected components in ascending order of their smallest node.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.node_count];
        let mut out = Vec::new();
        for s in self.nodes() {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count <= 1 || self.components().len() == 1
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkFile::from(self))?)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(src)?;
        file.into_network()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Network::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    format: String,
    nodes: Vec<NodeId>,
    links: Vec<[NodeId; 2]>,
    #[serde(default)]
    roles: BTreeMap<NodeId, Role>,
    #[serde(default)]
    switch_spec: BTreeMap<NodeId, SwitchSpec>,
}

impl From<&Network> for NetworkFile {
    fn from(net: &Network) -> Self {
        NetworkFile {
            format: FORMAT_TAG.to_string(),
            nodes: net.nodes().collect(),
            links: net.links().into_iter().map(|(u, v)| [u, v]).collect(),
            roles: net.roles.clone(),
            switch_spec: net.switch_spec.clone(),
        }
    }
}

impl NetworkFile {
    fn into_network(self) -> Result<Network> {
        if self.format != FORMAT_TAG {
            return Err(Error::Format(format!(
                "expected format '{FORMAT_TAG}', found '{}'",
                self.format
            )));
        }
        let n = self.nodes.len();
        let mut sorted = self.nodes.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &u)| i != u) {
            return Err(Error::InvalidNetwork(
                "node ids must be dense 0..n-1".into(),
            ));
        }
        let links: Vec<(NodeId, NodeId)> = self.links.iter().map(|l| (l[0], l[1])).collect();
        let mut net = Network::new(n, &links)?;
        for (u, role) in self.roles {
            net.set_role(u, role)?;
        }
        for (u, spec) in self.switch_spec {
            net.set_switch_spec(u, spec)?;
        }
        Ok(net)
    }
}

/// A simple path: distinct nodes, consecutive pairs linked, at least one link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Route {
    nodes: Vec<NodeId>,
}

impl Route {
    pub fn new(net: &Network, nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidRoute(
                "a route needs at least two nodes".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for &u in &nodes {
            net.check_node(u)?;
            if !seen.insert(u) {
                return Err(Error::InvalidRoute(format!("node {u} repeats")));
            }
        }
        for w in nodes.windows(2) {
            if !net.is_adjacent(w[0], w[1]) {
                return Err(Error::InvalidRoute(format!(
                    "{} and {} are not linked",
                    w[0], w[1]
                )));
            }
        }
        Ok(Route { nodes })
    }

    /// For routes produced by search code that already guarantees validity.
    pub(crate) fn from_valid(nodes: Vec<NodeId>) -> Self {
        debug_assert!(nodes.len() >= 2);
        Route { nodes }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Link count.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("route has nodes")
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.nodes.contains(&u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Network {
        Network::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn cycle4() -> Network {
        Network::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    /// Counts n-hop walks by explicit enumeration.
    fn count_walks(net: &Network, u: NodeId, v: NodeId, n: usize) -> u64 {
        if n == 0 {
            return u64::from(u == v);
        }
        net.adj(u)
            .iter()
            .map(|&z| count_walks(net, z, v, n - 1))
            .sum()
    }

    #[test]
    fn neighbor_sets() {
        let tri = triangle();
        assert_eq!(
            tri.neighbors(0)
                .unwrap()
                .iter()
                .copied()
                .collect::<Vec<_>>(),
            vec![1, 2]
        );
        let isolated = Network::new(2, &[]).unwrap();
        assert!(isolated.neighbors(1).unwrap().is_empty());
        let path = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            path.neighbors(1)
                .unwrap()
                .iter()
                .copied()
                .collect::<Vec<_>>(),
            vec![0, 2]
        );
        assert_eq!(path.neighbors(7), Err(Error::NodeNotFound(7)));
    }

    #[test]
    fn rejects_self_loops_and_unknown_nodes() {
        assert!(matches!(
            Network::new(2, &[(1, 1)]),
            Err(Error::InvalidNetwork(_))
        ));
        assert_eq!(Network::new(2, &[(0, 5)]), Err(Error::NodeNotFound(5)));
    }

    #[test]
    fn adjacency_power_counts_walks() {
        let path = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.adjacency_power(2).unwrap()[0][2], 1);
        let tri = triangle();
        let a2 = tri.adjacency_power(2).unwrap();
        assert_eq!(a2[0][0], count_walks(&tri, 0, 0, 2));
        assert_eq!(a2[0][0], 2);
        let c4 = cycle4();
        assert_eq!(
            c4.adjacency_power(2).unwrap()[0][2],
            count_walks(&c4, 0, 2, 2)
        );
        assert_eq!(c4.adjacency_power(2).unwrap()[0][2], 2);
        assert_eq!(
            c4.adjacency_power(3).unwrap()[0][1],
            count_walks(&c4, 0, 1, 3)
        );
    }

    #[test]
    fn adjacency_power_rejects_bad_hop_counts() {
        let tri = triangle();
        assert_eq!(
            tri.adjacency_power(0),
            Err(Error::InvalidHopCount { n: 0, max: 2 })
        );
        assert_eq!(
            tri.adjacency_power(3),
            Err(Error::InvalidHopCount { n: 3, max: 2 })
        );
    }

    #[test]
    fn route_validation() {
        let c4 = cycle4();
        assert!(Route::new(&c4, vec![0, 1, 2]).is_ok());
        assert!(Route::new(&c4, vec![0, 2]).is_err());
        assert!(Route::new(&c4, vec![0, 1, 0]).is_err());
        assert!(Route::new(&c4, vec![0]).is_err());
        let r = Route::new(&c4, vec![3, 0, 1]).unwrap();
        assert_eq!((r.len(), r.source(), r.target()), (2, 3, 1));
    }

    #[test]
    fn switch_spec_radix_invariant() {
        let mut tri = triangle();
        assert!(tri.set_switch_spec(0, SwitchSpec::new(4, 0, 2)).is_ok());
        assert!(tri.set_switch_spec(1, SwitchSpec::new(3, 0, 2)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut net = triangle();
        net.set_switch_spec(0, SwitchSpec::new(12, 0, 10)).unwrap();
        let text = net.to_json().unwrap();
        assert!(text.contains("\"format\": \"tdnet-v1\""));
        assert_eq!(Network::from_json(&text).unwrap(), net);
        let bad = text.replace("tdnet-v1", "tdnet-v0");
        assert!(Network::from_json(&bad).is_err());
    }
}
