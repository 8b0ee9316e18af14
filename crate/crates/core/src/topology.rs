//! Seeded topology generators.
//!
//! Servers are not materialized as nodes: each switch records its attached
//! server count in its `SwitchSpec`, with radix equal to the ports in use
//! (switch links plus servers) and no outage ports.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{Network, NodeId, Role, SwitchSpec};

/// Default branch layout of the ring topology: 6 + 13 = 19 nodes.
pub const DEFAULT_RING_BACKBONE: usize = 6;
pub const DEFAULT_RING_BRANCHES: [usize; 6] = [3, 3, 3, 2, 1, 1];

const JELLYFISH_ATTEMPTS: usize = 1000;

/// All nodes become switches with `servers(u)` attached servers.
fn finish_switches(net: &mut Network, servers: impl Fn(NodeId) -> usize) -> Result<()> {
    for u in 0..net.node_count() {
        net.set_role(u, Role::Switch)?;
    }
    for u in 0..net.node_count() {
        let h = servers(u);
        net.set_switch_spec(u, SwitchSpec::new(net.switch_degree(u) + h, 0, h))?;
    }
    Ok(())
}

/// One attempt at a simple `degree`-regular graph by stub matching; `None`
/// when the remaining stubs cannot be paired without loops or repeats.
fn try_regular(
    n: usize,
    degree: usize,
    rng: &mut ChaCha8Rng,
) -> Option<BTreeSet<(NodeId, NodeId)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<NodeId> = (0..n)
        .flat_map(|u| std::iter::repeat_n(u, degree))
        .collect();
    let ordered = |a: NodeId, b: NodeId| if a < b { (a, b) } else { (b, a) };
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut rest = Vec::new();
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            if a != b && !edges.contains(&ordered(a, b)) {
                edges.insert(ordered(a, b));
            } else {
                rest.push(a);
                rest.push(b);
            }
        }
        if rest.len() == stubs.len() {
            // no progress this round; give up if no usable pair remains
            let nodes: BTreeSet<NodeId> = rest.iter().copied().collect();
            let usable = nodes
                .iter()
                .any(|&a| nodes.iter().any(|&b| a < b && !edges.contains(&(a, b))));
            if !usable {
                return None;
            }
        }
        stubs = rest;
    }
    Some(edges)
}

/// Random `degree`-regular switch graph with `servers` servers per switch.
pub fn gen_jellyfish(switches: usize, degree: usize, servers: usize, seed: u64) -> Result<Network> {
    if degree >= switches.max(1) && degree > 0 {
        return Err(Error::InfeasibleDegreeSequence(format!(
            "degree {degree} needs more than {switches} switches"
        )));
    }
    if (degree * switches) % 2 == 1 {
        return Err(Error::InfeasibleDegreeSequence(format!(
            "degree {degree} times {switches} switches is odd"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..JELLYFISH_ATTEMPTS {
        if let Some(edges) = try_regular(switches, degree, &mut rng) {
            let links: Vec<_> = edges.into_iter().collect();
            let mut net = Network::new(switches, &links)?;
            finish_switches(&mut net, |_| servers)?;
            return Ok(net);
        }
    }
    Err(Error::InfeasibleDegreeSequence(format!(
        "no simple {degree}-regular graph on {switches} switches after {JELLYFISH_ATTEMPTS} attempts"
    )))
}

/// Layer of a switch in a generated fat-tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FatTreeLayer {
    Core,
    Aggregation,
    Edge,
}

/// Node ids of a generated fat-tree, by layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FatTreeLayout {
    pub core: Vec<NodeId>,
    pub aggregation: Vec<NodeId>,
    pub edge: Vec<NodeId>,
}

impl FatTreeLayout {
    pub fn layer(&self, u: NodeId) -> Option<FatTreeLayer> {
        if self.core.contains(&u) {
            Some(FatTreeLayer::Core)
        } else if self.aggregation.contains(&u) {
            Some(FatTreeLayer::Aggregation)
        } else if self.edge.contains(&u) {
            Some(FatTreeLayer::Edge)
        } else {
            None
        }
    }
}

/// Three-layer `k`-ary fat-tree with servers on edge switches only.
pub fn gen_fattree(k: usize, servers: usize) -> Result<(Network, FatTreeLayout)> {
    if k % 2 == 1 || k < 2 {
        return Err(Error::OddK(k));
    }
    gen_fattree_pods(k, k, (k / 2) * (k / 2), servers)
}

/// A fat-tree keeping only the first `pods` pods and the first `cores` core
/// switches. Core `c` links to aggregation switch `c / (k/2)` of every pod.
/// Ids: cores, then aggregation switches pod by pod, then edge switches.
pub fn gen_fattree_pods(
    k: usize,
    pods: usize,
    cores: usize,
    servers: usize,
) -> Result<(Network, FatTreeLayout)> {
    if k % 2 == 1 || k < 2 {
        return Err(Error::OddK(k));
    }
    let half = k / 2;
    if pods == 0 || pods > k || cores > half * half {
        return Err(Error::InvalidArgument(format!(
            "a {k}-ary fat-tree has at most {k} pods and {} cores",
            half * half
        )));
    }
    let core: Vec<NodeId> = (0..cores).collect();
    let aggregation: Vec<NodeId> = (0..pods * half).map(|i| cores + i).collect();
    let edge: Vec<NodeId> = (0..pods * half).map(|i| cores + pods * half + i).collect();
    let mut links = Vec::new();
    for p in 0..pods {
        for j in 0..half {
            let agg = aggregation[p * half + j];
            for i in 0..half {
                links.push((agg, edge[p * half + i]));
            }
        }
        for (c, &cs) in core.iter().enumerate() {
            links.push((cs, aggregation[p * half + c / half]));
        }
    }
    let mut net = Network::new(cores + 2 * pods * half, &links)?;
    let edge_start = cores + pods * half;
    finish_switches(&mut net, |u| if u >= edge_start { servers } else { 0 })?;
    Ok((
        net,
        FatTreeLayout {
            core,
            aggregation,
            edge,
        },
    ))
}

/// `(pods, cores)` of a 4-ary truncated fat-tree with exactly `switches`
/// switches.
pub fn fattree_layout_for(switches: usize) -> Result<(usize, usize)> {
    if switches < 5 {
        return Err(Error::InvalidArgument(
            "a truncated fat-tree needs at least 5 switches".into(),
        ));
    }
    let pods = (switches - 4).div_ceil(4).max(1);
    if pods > 4 {
        return Err(Error::InvalidArgument(format!(
            "{switches} switches exceed a 4-ary fat-tree"
        )));
    }
    Ok((pods, switches - 4 * pods))
}

/// Backbone cycle `0..backbone` with paths attached round-robin to backbone
/// nodes; branch nodes are numbered consecutively after the backbone.
pub fn gen_ring(backbone: usize, branch_sizes: &[usize]) -> Result<Network> {
    if backbone < 3 {
        return Err(Error::BackboneTooSmall(backbone));
    }
    let n = backbone + branch_sizes.iter().sum::<usize>();
    let mut links: Vec<_> = (0..backbone).map(|i| (i, (i + 1) % backbone)).collect();
    let mut next = backbone;
    for (b, &size) in branch_sizes.iter().enumerate() {
        let mut prev = b % backbone;
        for _ in 0..size {
            links.push((prev, next));
            prev = next;
            next += 1;
        }
    }
    let mut net = Network::new(n, &links)?;
    for u in 0..n {
        net.set_role(u, Role::Switch)?;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jellyfish_cases() {
        let tri = gen_jellyfish(3, 2, 10, 1).unwrap();
        assert_eq!(tri.links(), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(tri
            .nodes()
            .all(|u| tri.switch_spec(u).unwrap().servers == 10));
        let iso = gen_jellyfish(5, 0, 2, 1).unwrap();
        assert_eq!(iso.link_count(), 0);
        assert!(gen_jellyfish(4, 4, 1, 1).is_err());
        assert!(gen_jellyfish(5, 3, 1, 1).is_err());
        let a = gen_jellyfish(20, 4, 10, 9).unwrap();
        assert!(a.nodes().all(|u| a.degree(u) == 4));
        assert_eq!(a, gen_jellyfish(20, 4, 10, 9).unwrap());
    }

    #[test]
    fn fattree_layers() {
        let (net, layout) = gen_fattree(2, 8).unwrap();
        assert_eq!(
            (
                layout.core.len(),
                layout.aggregation.len(),
                layout.edge.len()
            ),
            (1, 2, 2)
        );
        assert!(net.is_connected());
        let (net, layout) = gen_fattree(4, 8).unwrap();
        assert_eq!(
            (
                layout.core.len(),
                layout.aggregation.len(),
                layout.edge.len()
            ),
            (4, 8, 8)
        );
        assert_eq!(net.link_count(), 32);
        for u in net.nodes() {
            let servers = net.switch_spec(u).unwrap().servers;
            assert_eq!(servers > 0, layout.layer(u) == Some(FatTreeLayer::Edge));
        }
        assert!(layout.core.iter().all(|&c| net.degree(c) == 4));
        assert_eq!(gen_fattree(3, 1).unwrap_err(), Error::OddK(3));
    }

    #[test]
    fn truncated_fattree_sizes() {
        for n in [6, 8, 10, 12, 20] {
            let (pods, cores) = fattree_layout_for(n).unwrap();
            let (net, _) = gen_fattree_pods(4, pods, cores, 8).unwrap();
            assert_eq!(net.node_count(), n);
            assert!(net.is_connected(), "size {n}");
        }
    }

    #[test]
    fn ring_cases() {
        let ring = gen_ring(DEFAULT_RING_BACKBONE, &DEFAULT_RING_BRANCHES).unwrap();
        assert_eq!(ring.node_count(), 19);
        assert_eq!(ring.link_count(), 19);
        assert!(ring.is_connected());
        assert!((0..6).all(|u| ring.is_adjacent(u, (u + 1) % 6)));
        let tri = gen_ring(3, &[]).unwrap();
        assert_eq!(tri.links(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(gen_ring(2, &[]).unwrap_err(), Error::BackboneTooSmall(2));
    }
}
