//! Maximum concurrent multi-commodity flow, edge-flow formulation.
//!
//! Commodities are aggregated by source: `f^s_ij ≥ 0` is the flow from
//! source `s` on arc `i → j`. Every node `i ≠ s` absorbs `λ·𝒯_si`, each link
//! carries at most its capacity over both directions and all sources, and
//! `λ` is maximized.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};
use crate::network::{Network, NodeId};
use crate::traffic::{CapacityMatrix, TrafficMatrix};

/// Largest `λ` such that `λ·𝒯` is routable within uniform link capacity.
/// `+∞` when there is no demand.
pub fn lp_oracle_throughput(net: &Network, tm: &TrafficMatrix, link_capacity: f64) -> Result<f64> {
    lp_oracle_with(net, tm, |_, _| link_capacity)
}

pub fn lp_oracle_capacities(net: &Network, tm: &TrafficMatrix, cm: &CapacityMatrix) -> Result<f64> {
    lp_oracle_with(net, tm, |u, v| cm.get(u, v))
}

fn lp_oracle_with(
    net: &Network,
    tm: &TrafficMatrix,
    capacity: impl Fn(NodeId, NodeId) -> f64,
) -> Result<f64> {
    tm.check_network(net)?;
    let demands = tm.demands();
    if demands.is_empty() {
        return Ok(f64::INFINITY);
    }
    let links = net.links();
    let arcs: Vec<(NodeId, NodeId)> = links.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
    let mut sources: Vec<NodeId> = demands.iter().map(|&(s, _, _)| s).collect();
    sources.dedup();

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let lambda = lp.add_var(1.0, (0.0, f64::INFINITY));
    // flow[s][a]
    let flow: Vec<Vec<_>> = sources
        .iter()
        .map(|_| {
            arcs.iter()
                .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();

    for (k, &s) in sources.iter().enumerate() {
        for i in net.nodes().filter(|&i| i != s) {
            let mut terms = Vec::new();
            for (a, &(x, y)) in arcs.iter().enumerate() {
                if y == i {
                    terms.push((flow[k][a], 1.0));
                } else if x == i {
                    terms.push((flow[k][a], -1.0));
                }
            }
            let d = tm.get(s, i);
            if d > 0.0 {
                terms.push((lambda, -d));
            }
            if !terms.is_empty() {
                lp.add_constraint(terms, ComparisonOp::Eq, 0.0);
            } else if d > 0.0 {
                return Err(Error::NoRoute(s, i));
            }
        }
    }
    for (l, &(u, v)) in links.iter().enumerate() {
        let terms: Vec<_> = (0..sources.len())
            .flat_map(|k| [(flow[k][2 * l], 1.0), (flow[k][2 * l + 1], 1.0)])
            .collect();
        lp.add_constraint(terms, ComparisonOp::Le, capacity(u, v).max(0.0));
    }

    let outcome = lp.solve().map_err(|e| match e {
        microlp::Error::Infeasible => Error::LpInfeasible,
        other => Error::LpFailure(other.to_string()),
    })?;
    let solution = outcome
        .into_solution()
        .map_err(|_| Error::LpFailure("solve interrupted".into()))?;
    let value = solution.var_value(lambda);
    if value <= 1e-12 {
        // only a zero-capacity cut between demanded pairs forces λ = 0
        return Err(Error::LpInfeasible);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let net = Network::new(2, &[(0, 1)]).unwrap();
        let tm = TrafficMatrix::new(vec![0, 1], vec![vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        let l = lp_oracle_throughput(&net, &tm, 10.0).unwrap();
        assert!((l - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_demand_is_unbounded() {
        let net = Network::new(2, &[(0, 1)]).unwrap();
        let tm = TrafficMatrix::zeros(vec![0, 1]);
        assert_eq!(lp_oracle_throughput(&net, &tm, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn disconnected_demand_is_infeasible() {
        let net = Network::new(4, &[(0, 1), (2, 3)]).unwrap();
        let tm = crate::traffic::gen_traffic(4, 1.0, 1).unwrap();
        assert!(lp_oracle_throughput(&net, &tm, 1.0).is_err());
    }

    #[test]
    fn uniform_triangle() {
        // direct routing loads each link with 2λ; detours only cost more
        let net = Network::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let e = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let tm = TrafficMatrix::new(vec![0, 1, 2], e).unwrap();
        let l = lp_oracle_throughput(&net, &tm, 3.0).unwrap();
        assert!((l - 1.5).abs() < 1e-9);
    }
}
