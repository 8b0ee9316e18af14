//! Throughput-gap and distribution-radius experiments on generated
//! datacenter topologies.
//!
//! Node divergences come from a transit-limited materialization: the demand
//! is routed, each switch relays at most a fixed amount of other switches'
//! traffic, and the backlog shows up as divergence at the relay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::all_node_td;
use crate::error::{Error, Result};
use crate::materialize::transit_limited_flows;
use crate::network::{Network, NodeId};
use crate::routing::{route_pairs, RouteTable, Router};
use crate::topology::{fattree_layout_for, gen_fattree_pods, gen_jellyfish};
use crate::traffic::{gen_traffic_for, TrafficMatrix};

use super::estimate::{classify, estimate_from_split};
use super::lp::lp_oracle_throughput;
use super::split::{SplitScheme, DEFAULT_FLOOR};

pub const JELLYFISH_SERVERS: usize = 10;
pub const FATTREE_SERVERS: usize = 8;
pub const JELLYFISH_DEGREE: usize = 4;
/// Link capacity per unit of demand marginal.
pub const CAPACITY_PER_MARGINAL: f64 = 1.0;
/// Per-switch transit capacity per unit of demand marginal.
pub const TRANSIT_PER_MARGINAL: f64 = 0.5;
/// Observe-and-reroute rounds per step while the mechanism is on.
pub const DEFAULT_CONTROL_ROUNDS: usize = 5;
pub const DEFAULT_STEPS: usize = 80;
pub const DEFAULT_INTERVALS: usize = 4;
pub const DEFAULT_JITTER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topo {
    Jellyfish,
    Fattree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentRouter {
    TdAware,
    HopOnly,
}

/// A generated topology with its demand, link capacity and switch transit
/// capacity.
#[derive(Debug, Clone)]
pub struct Instance {
    pub net: Network,
    pub tm: TrafficMatrix,
    pub capacity: f64,
    pub transit: f64,
}

/// Connected topology of `switches` switches plus a demand matrix over all
/// switches, deterministic in `(topo, switches, seed)`.
pub fn instance(topo: Topo, switches: usize, seed: u64) -> Result<Instance> {
    let (net, servers) = match topo {
        Topo::Jellyfish => {
            let degree = JELLYFISH_DEGREE.min(switches.saturating_sub(1));
            let degree = if (degree * switches) % 2 == 1 {
                degree - 1
            } else {
                degree
            };
            let mut attempt = 0u64;
            loop {
                let sub = seed.wrapping_mul(1_000_003).wrapping_add(attempt);
                let net = gen_jellyfish(switches, degree, JELLYFISH_SERVERS, sub)?;
                if net.is_connected() {
                    break (net, JELLYFISH_SERVERS);
                }
                attempt += 1;
                if attempt > 100 {
                    return Err(Error::InvalidNetwork(format!(
                        "no connected {degree}-regular graph on {switches} switches"
                    )));
                }
            }
        }
        Topo::Fattree => {
            let (pods, cores) = fattree_layout_for(switches)?;
            (
                gen_fattree_pods(4, pods, cores, FATTREE_SERVERS)?.0,
                FATTREE_SERVERS,
            )
        }
    };
    let marginal = servers as f64;
    let tm = gen_traffic_for(net.switches(), marginal, seed)?;
    Ok(Instance {
        net,
        tm,
        capacity: CAPACITY_PER_MARGINAL * marginal,
        transit: TRANSIT_PER_MARGINAL * marginal,
    })
}

fn demand_pairs(tm: &TrafficMatrix) -> Vec<(NodeId, NodeId)> {
    tm.demands().iter().map(|&(u, v, _)| (u, v)).collect()
}

fn routes_for(
    net: &Network,
    tm: &TrafficMatrix,
    td: &[f64],
    router: ExperimentRouter,
) -> Result<RouteTable> {
    let r = match router {
        ExperimentRouter::TdAware => Router::td_aware(),
        ExperimentRouter::HopOnly => Router::HopOnly,
    };
    route_pairs(net, td, &demand_pairs(tm), r)
}

/// Node divergences after routing `tm` with `router` against the observed
/// divergences `observed`.
pub fn routed_divergence(
    net: &Network,
    tm: &TrafficMatrix,
    observed: &[f64],
    router: ExperimentRouter,
    transit: f64,
) -> Result<Vec<f64>> {
    let routes = routes_for(net, tm, observed, router)?;
    let split = SplitScheme::length_proportional(&routes, observed, DEFAULT_FLOOR);
    all_node_td(
        net,
        &transit_limited_flows(net, tm, &routes, &split, transit)?,
        0.0,
    )
}

/// Node divergences seen when `tm` is routed divergence-blind.
pub fn observed_divergence(net: &Network, tm: &TrafficMatrix, transit: f64) -> Result<Vec<f64>> {
    let zero = vec![0.0; net.node_count()];
    routed_divergence(net, tm, &zero, ExperimentRouter::HopOnly, transit)
}

/// Starting from the divergence-blind field, reroute `rounds` times, each
/// time against the running average of what was observed so far.
pub fn controlled_divergence(
    net: &Network,
    tm: &TrafficMatrix,
    transit: f64,
    rounds: usize,
) -> Result<Vec<f64>> {
    let mut observed = observed_divergence(net, tm, transit)?;
    let mut td = observed.clone();
    for _ in 0..rounds {
        td = routed_divergence(net, tm, &observed, ExperimentRouter::TdAware, transit)?;
        observed
            .iter_mut()
            .zip(&td)
            .for_each(|(o, x)| *o = 0.5 * (*o + x));
    }
    Ok(td)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub size: usize,
    #[serde(skip)]
    pub seed: u64,
    pub theta_estimate: f64,
    pub lp_oracle: f64,
    pub gap: f64,
}

/// A non-positive bracket leaves the estimate undefined; the row is kept
/// with NaN estimate and gap.
pub fn gap_row(topo: Topo, size: usize, seed: u64, router: ExperimentRouter) -> Result<GapRow> {
    let inst = instance(topo, size, seed)?;
    let td = observed_divergence(&inst.net, &inst.tm, inst.transit)?;
    let routes = routes_for(&inst.net, &inst.tm, &td, router)?;
    let split = SplitScheme::length_proportional(&routes, &td, DEFAULT_FLOOR);
    let theta = match estimate_from_split(&inst.net, &inst.tm, &routes, &split, classify(&inst.net))
    {
        Ok(est) => est.theta,
        Err(Error::NonPositiveBracket { bracket }) => {
            log::warn!(
                "{topo:?} size {size} seed {seed}: bracket {bracket} <= 0, estimate undefined"
            );
            f64::NAN
        }
        Err(e) => return Err(e),
    };
    let lp = lp_oracle_throughput(&inst.net, &inst.tm, inst.capacity)?;
    Ok(GapRow {
        size,
        seed,
        theta_estimate: theta,
        lp_oracle: lp,
        gap: lp - theta,
    })
}

/// One row per `(size, seed)`, sorted by size then seed.
pub fn gap_experiment(
    sizes: &[usize],
    topo: Topo,
    seeds: &[u64],
    router: ExperimentRouter,
) -> Result<Vec<GapRow>> {
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(n, s)| gap_row(topo, n, s, router))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.size, r.seed));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub step: usize,
    pub mechanism_on: bool,
    /// `|Δ_{u,v} − 1|`; NaN when the denominator rate vanishes.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusConfig {
    pub steps: usize,
    pub intervals: usize,
    pub pair: (NodeId, NodeId),
    pub jitter: f64,
    /// Per-switch transit capacity.
    pub transit: f64,
    pub rounds: usize,
    pub seed: u64,
}

/// `□̂_u = Σ_{z∈𝒩_u} |∇_z|`, the neighborhood-load stand-in for the spatial
/// rate when no coupling model is declared.
pub fn proxy_rate(net: &Network, td: &[f64], u: NodeId) -> f64 {
    net.neighbors(u)
        .map_or(0.0, |n| n.iter().map(|&z| td[z].abs()).sum())
}

/// Alternating OFF/ON intervals; ON routes with divergence-filtered route
/// sets re-planned for `rounds` observe-and-reroute rounds, OFF with
/// divergence-blind single routes.
pub fn radius_experiment(
    net: &Network,
    tm: &TrafficMatrix,
    cfg: &RadiusConfig,
) -> Result<Vec<RadiusRow>> {
    let (u, v) = cfg.pair;
    net.check_node(u)?;
    net.check_node(v)?;
    if u == v {
        return Err(Error::InvalidArgument(
            "monitored pair must be two distinct nodes".into(),
        ));
    }
    if cfg.intervals == 0 || !cfg.steps.is_multiple_of(cfg.intervals) {
        return Err(Error::InvalidArgument(format!(
            "{} steps do not split into {} equal intervals",
            cfg.steps, cfg.intervals
        )));
    }
    let per = cfg.steps / cfg.intervals;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // jitter factors are drawn up front so each step only depends on its own slice
    let n = tm.ids().len();
    let factors: Vec<Vec<Vec<f64>>> = (0..cfg.steps)
        .map(|_| {
            (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| 1.0 + rng.gen_range(-cfg.jitter..=cfg.jitter))
                        .collect()
                })
                .collect()
        })
        .collect();
    let rows = (0..cfg.steps)
        .into_par_iter()
        .map(|step| {
            let on = (step / per) % 2 == 1;
            let demand = tm.perturbed(&factors[step]);
            let td = if on {
                controlled_divergence(net, &demand, cfg.transit, cfg.rounds)?
            } else {
                observed_divergence(net, &demand, cfg.transit)?
            };
            let (ru, rv) = (proxy_rate(net, &td, u), proxy_rate(net, &td, v));
            let epsilon = if rv == 0.0 {
                f64::NAN
            } else {
                (ru / rv - 1.0).abs()
            };
            Ok(RadiusRow {
                step,
                mechanism_on: on,
                epsilon,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

/// Means of finite `ε` over OFF and ON steps.
pub fn interval_means(rows: &[RadiusRow]) -> (f64, f64) {
    let mean = |on: bool| {
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.mechanism_on == on && r.epsilon.is_finite())
            .map(|r| r.epsilon)
            .collect();
        if xs.is_empty() {
            f64::NAN
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    (mean(false), mean(true))
}

/// Default monitored pair: smallest-id switch and its smallest neighbor.
pub fn default_pair(net: &Network) -> Result<(NodeId, NodeId)> {
    let u = *net
        .switches()
        .first()
        .ok_or_else(|| Error::InvalidNetwork("no switches".into()))?;
    let v = *net
        .neighbors(u)?
        .iter()
        .next()
        .ok_or(Error::NoRoute(u, u))?;
    Ok((u, v))
}

pub fn radius_config(inst: &Instance, seed: u64) -> Result<RadiusConfig> {
    Ok(RadiusConfig {
        steps: DEFAULT_STEPS,
        intervals: DEFAULT_INTERVALS,
        pair: default_pair(&inst.net)?,
        jitter: DEFAULT_JITTER,
        transit: inst.transit,
        rounds: DEFAULT_CONTROL_ROUNDS,
        seed,
    })
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_rows_are_deterministic() {
        let a = gap_experiment(&[6], Topo::Jellyfish, &[1], ExperimentRouter::TdAware).unwrap();
        assert_eq!(a.len(), 1);
        let csv = to_csv(&a).unwrap();
        assert_eq!(
            csv.lines().next().unwrap(),
            "size,theta_estimate,lp_oracle,gap"
        );
        let b = gap_experiment(&[6], Topo::Jellyfish, &[1], ExperimentRouter::TdAware).unwrap();
        assert_eq!(csv, to_csv(&b).unwrap());
    }

    #[test]
    fn radius_rows_follow_intervals() {
        let inst = instance(Topo::Fattree, 8, 2).unwrap();
        let mut cfg = radius_config(&inst, 2).unwrap();
        cfg.steps = 8;
        let rows = radius_experiment(&inst.net, &inst.tm, &cfg).unwrap();
        let on: Vec<bool> = rows.iter().map(|r| r.mechanism_on).collect();
        assert_eq!(on, vec![false, false, true, true, false, false, true, true]);
    }
}
