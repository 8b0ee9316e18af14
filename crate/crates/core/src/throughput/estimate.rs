//! Closed-form throughput estimate under divergence-aware route splitting:
//!
//! `θ = (2ℰ/ℋ) · [1 + Σ_{(u,v)} (Σ_{ρ∈ψ_uv} α_ρ|ρ|/S_ρ − |ψ_uv|)]⁻¹`
//!
//! summed over ordered switch pairs with positive demand.

use serde::{Deserialize, Serialize};

use crate::divergence::all_node_td;
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::network::{Network, NodeId};
use crate::routing::RouteTable;
use crate::traffic::TrafficMatrix;

use super::split::{SplitScheme, DEFAULT_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyClass {
    /// Every switch hosts the same number of servers.
    UniRegular,
    /// Only some switches host servers, in possibly different numbers.
    BiRegular,
}

/// Uni-regular when every switch spec lists the same positive server count.
pub fn classify(net: &Network) -> TopologyClass {
    let counts: Vec<usize> = net
        .switches()
        .iter()
        .filter_map(|&u| net.switch_spec(u).map(|s| s.servers))
        .collect();
    match counts.first() {
        Some(&h) if h > 0 && counts.iter().all(|&c| c == h) => TopologyClass::UniRegular,
        Some(_) => TopologyClass::BiRegular,
        None => TopologyClass::UniRegular,
    }
}

/// `2ℰ` from free switch ports: `Σ_u (ℛ_u − 𝒬_u − ℋ)` for uni-regular and
/// `Σ_u (ℛ_u − 𝒬_u − ℋ_u·𝒮(u))` for bi-regular topologies. Without switch
/// specs, twice the switch-to-switch link count.
pub fn port_accounting(net: &Network, class: TopologyClass) -> Result<f64> {
    let switches = net.switches();
    let specs: Option<Vec<_>> = switches.iter().map(|&u| net.switch_spec(u)).collect();
    let Some(specs) = specs else {
        return Ok(2.0 * net.switch_link_count() as f64);
    };
    let mut total = 0i64;
    match class {
        TopologyClass::UniRegular => {
            let h = specs.first().map_or(0, |s| s.servers);
            if specs.iter().any(|s| s.servers != h) {
                return Err(Error::InvalidNetwork(
                    "uni-regular accounting needs the same server count on every switch".into(),
                ));
            }
            for s in &specs {
                total += s.radix as i64 - s.outage_ports as i64 - h as i64;
            }
        }
        TopologyClass::BiRegular => {
            for s in &specs {
                // ℋ_u·𝒮(u) is just ℋ_u: the selector only zeroes server-free switches
                total += s.radix as i64 - s.outage_ports as i64 - s.servers as i64;
            }
        }
    }
    Ok(total as f64)
}

/// Marginal used in the `2ℰ/ℋ` factor: the demand marginal, or the common
/// server count when there is no demand.
fn scale_marginal(net: &Network, tm: &TrafficMatrix) -> Result<f64> {
    if tm.marginal() > 0.0 {
        return Ok(tm.marginal());
    }
    let h: Vec<usize> = net
        .switches()
        .iter()
        .filter_map(|&u| net.switch_spec(u).map(|s| s.servers))
        .filter(|&h| h > 0)
        .collect();
    match h.first() {
        Some(&x) if h.iter().all(|&y| y == x) => Ok(x as f64),
        _ => Err(Error::InvalidArgument(
            "zero demand and no common server count: the marginal is undefined".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub source: NodeId,
    pub target: NodeId,
    pub routes: usize,
    pub hop_count: usize,
    /// `Σ_ρ α_ρ|ρ|/S_ρ`.
    pub weighted_length: f64,
    /// `weighted_length − |ψ|`.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputEstimate {
    pub theta: f64,
    pub bracket: f64,
    pub class: TopologyClass,
    /// `ℰ`.
    pub e_count: f64,
    pub marginal: f64,
    pub per_pair_terms: Vec<PairTerm>,
    /// Routes with `α ≥ 1`, which the coefficient constraint excludes but
    /// the normalization can force.
    pub alpha_violations: usize,
}

fn pair_terms(
    tm: &TrafficMatrix,
    routes: &RouteTable,
    split: &SplitScheme,
) -> Result<Vec<PairTerm>> {
    tm.demands()
        .into_iter()
        .map(|(u, v, _)| {
            let set = routes.get(&(u, v)).ok_or(Error::MissingRouteSet(u, v))?;
            let s = split.get(u, v).ok_or(Error::MissingRouteSet(u, v))?;
            let weighted: f64 = (0..s.alphas.len())
                .map(|i| s.alphas[i] * s.lengths[i] as f64 / s.sums[i])
                .sum();
            Ok(PairTerm {
                source: u,
                target: v,
                routes: set.len(),
                hop_count: set.hop_count,
                weighted_length: weighted,
                contribution: weighted - set.len() as f64,
            })
        })
        .collect()
}

/// The estimate for a given split scheme.
pub fn estimate_from_split(
    net: &Network,
    tm: &TrafficMatrix,
    routes: &RouteTable,
    split: &SplitScheme,
    class: TopologyClass,
) -> Result<ThroughputEstimate> {
    let two_e = port_accounting(net, class)?;
    let marginal = scale_marginal(net, tm)?;
    let per_pair_terms = pair_terms(tm, routes, split)?;
    let bracket = 1.0 + per_pair_terms.iter().map(|p| p.contribution).sum::<f64>();
    if bracket <= 0.0 || !bracket.is_finite() {
        return Err(Error::NonPositiveBracket { bracket });
    }
    let alpha_violations = tm
        .demands()
        .iter()
        .filter_map(|&(u, v, _)| split.get(u, v))
        .map(|s| s.alpha_violations().len())
        .sum();
    Ok(ThroughputEstimate {
        theta: two_e / marginal / bracket,
        bracket,
        class,
        e_count: two_e / 2.0,
        marginal,
        per_pair_terms,
        alpha_violations,
    })
}

/// Length-proportional coefficients from the node divergences of `field` at `t`.
pub fn estimate_throughput(
    net: &Network,
    tm: &TrafficMatrix,
    routes: &RouteTable,
    field: &FlowField,
    t: f64,
) -> Result<ThroughputEstimate> {
    let td = all_node_td(net, field, t)?;
    let split = SplitScheme::length_proportional(routes, &td, DEFAULT_FLOOR);
    estimate_from_split(net, tm, routes, &split, classify(net))
}

/// Both sides of the total transient traffic balance at a given `θ`:
/// free switch capacity `2ℰ − θ Σ 𝒯` against traffic carried through
/// intermediate switches `θ Σ 𝒯_uv Σ_ρ β_ρ(|ρ| − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientBalance {
    pub theta: f64,
    pub capacity_side: f64,
    pub route_side: f64,
}

impl TransientBalance {
    pub fn residual(&self) -> f64 {
        self.capacity_side - self.route_side
    }
}

fn carried_per_unit(tm: &TrafficMatrix, split: &SplitScheme) -> Result<f64> {
    tm.demands().into_iter().try_fold(0.0, |acc, (u, v, d)| {
        let s = split.get(u, v).ok_or(Error::MissingRouteSet(u, v))?;
        let hops: f64 = s
            .betas
            .iter()
            .zip(&s.lengths)
            .map(|(b, &l)| b * (l as f64 - 1.0))
            .sum();
        Ok(acc + d * hops)
    })
}

pub fn transient_balance(
    two_e: f64,
    tm: &TrafficMatrix,
    split: &SplitScheme,
    theta: f64,
) -> Result<TransientBalance> {
    Ok(TransientBalance {
        theta,
        capacity_side: two_e - theta * tm.total(),
        route_side: theta * carried_per_unit(tm, split)?,
    })
}

/// The `θ` at which the two transient-traffic expressions agree.
pub fn balanced_theta(two_e: f64, tm: &TrafficMatrix, split: &SplitScheme) -> Result<f64> {
    Ok(two_e / (tm.total() + carried_per_unit(tm, split)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FrozenRoute {
    nodes: Vec<NodeId>,
    /// `α_ρ|ρ|`.
    weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FrozenPair {
    routes: Vec<FrozenRoute>,
}

/// The estimate as a function of node divergences, with routes and
/// coefficients `α` held at the values of a reference split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenThroughput {
    pub two_e: f64,
    pub marginal: f64,
    pub floor: f64,
    /// `Σ |ψ|`.
    route_count: f64,
    pairs: Vec<FrozenPair>,
}

impl FrozenThroughput {
    pub fn new(
        net: &Network,
        tm: &TrafficMatrix,
        routes: &RouteTable,
        split: &SplitScheme,
        class: TopologyClass,
    ) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut route_count = 0.0;
        for (u, v, _) in tm.demands() {
            let set = routes.get(&(u, v)).ok_or(Error::MissingRouteSet(u, v))?;
            let s = split.get(u, v).ok_or(Error::MissingRouteSet(u, v))?;
            route_count += set.len() as f64;
            pairs.push(FrozenPair {
                routes: set
                    .routes
                    .iter()
                    .zip(&s.alphas)
                    .zip(&s.lengths)
                    .map(|((r, a), &l)| FrozenRoute {
                        nodes: r.nodes().to_vec(),
                        weight: a * l as f64,
                    })
                    .collect(),
            });
        }
        Ok(FrozenThroughput {
            two_e: port_accounting(net, class)?,
            marginal: scale_marginal(net, tm)?,
            floor: split.floor,
            route_count,
            pairs,
        })
    }

    fn sum(&self, r: &FrozenRoute, td: &[f64]) -> f64 {
        r.nodes.iter().map(|&w| td[w].abs()).sum::<f64>()
    }

    pub fn bracket(&self, td: &[f64]) -> f64 {
        let weighted: f64 = self
            .pairs
            .iter()
            .flat_map(|p| &p.routes)
            .map(|r| r.weight / self.sum(r, td).max(self.floor))
            .sum();
        1.0 + weighted - self.route_count
    }

    pub fn theta(&self, td: &[f64]) -> Result<f64> {
        let b = self.bracket(td);
        if b <= 0.0 || !b.is_finite() {
            return Err(Error::NonPositiveBracket { bracket: b });
        }
        Ok(self.two_e / self.marginal / b)
    }

    /// `2ℰ/ℋ`, so that `θ = scale / bracket`.
    pub fn scale(&self) -> f64 {
        self.two_e / self.marginal
    }

    /// The bracket and `∂bracket/∂∇_w` for every node.
    pub fn bracket_gradient(&self, td: &[f64]) -> (f64, Vec<f64>) {
        let mut db = vec![0.0; td.len()];
        for r in self.pairs.iter().flat_map(|p| &p.routes) {
            let s = self.sum(r, td);
            if s <= self.floor {
                continue;
            }
            let g = -r.weight / (s * s);
            for &w in &r.nodes {
                db[w] += g * td[w].signum();
            }
        }
        (self.bracket(td), db)
    }

    /// `θ` and `∂θ/∂∇_w` for every node.
    pub fn theta_gradient(&self, td: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (b, db) = self.bracket_gradient(td);
        if b <= 0.0 || !b.is_finite() {
            return Err(Error::NonPositiveBracket { bracket: b });
        }
        let k = self.scale();
        let grad = db.into_iter().map(|d| -k / (b * b) * d).collect();
        Ok((k / b, grad))
    }
}
