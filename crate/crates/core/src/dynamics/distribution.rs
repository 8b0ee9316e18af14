//! Maximal traffic distribution: spatial-rate ratios between nodes and the
//! global/local checks on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, NodeId};

use super::coupling::CouplingModel;
use super::spatial::{link_derivative, spatial_derivative_at, spatial_td_rate};

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionRatio {
    /// `Δ_{u,v} = □_u / □_v`.
    pub value: f64,
    /// `|Δ_{u,v} − 1|`.
    pub epsilon: f64,
}

impl DistributionRatio {
    pub fn from_rates(rate_u: f64, rate_v: f64, v: NodeId) -> Result<Self> {
        if rate_v == 0.0 || !rate_v.is_finite() {
            return Err(Error::ZeroDenominatorRate(v));
        }
        let value = rate_u / rate_v;
        Ok(DistributionRatio {
            value,
            epsilon: (value - 1.0).abs(),
        })
    }
}

pub fn distribution_ratio(
    model: &CouplingModel,
    net: &Network,
    u: NodeId,
    v: NodeId,
    t: f64,
) -> Result<DistributionRatio> {
    let rate_v = spatial_td_rate(model, net, v, t)?;
    let rate_u = spatial_td_rate(model, net, u, t)?;
    DistributionRatio::from_rates(rate_u, rate_v, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    /// Every ordered pair of distinct nodes.
    #[default]
    Global,
    /// Every node against each of its neighbors.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCheck {
    pub mode: CheckMode,
    pub epsilon: f64,
    pub satisfied: bool,
    /// Pair with the largest `|Δ − 1|`; ties go to the smallest pair.
    pub worst_pair: Option<(NodeId, NodeId)>,
    pub worst_eps: f64,
    pub pairs_checked: usize,
}

/// Checks `|Δ_{u,v} − 1| ≤ ε` from precomputed spatial rates indexed by node.
pub fn check_rates(
    net: &Network,
    rates: &[f64],
    epsilon: f64,
    mode: CheckMode,
) -> Result<DistributionCheck> {
    if let Some(v) = rates.iter().position(|r| *r == 0.0 || !r.is_finite()) {
        return Err(Error::ZeroDenominatorRate(v));
    }
    let mut worst: Option<((NodeId, NodeId), f64)> = None;
    let mut count = 0;
    let mut visit = |u: NodeId, v: NodeId| -> Result<()> {
        let r = DistributionRatio::from_rates(rates[u], rates[v], v)?;
        count += 1;
        // pairs arrive in ascending order, so strict > keeps the smallest on ties
        if worst.is_none_or(|(_, e)| r.epsilon > e) {
            worst = Some(((u, v), r.epsilon));
        }
        Ok(())
    };
    for u in net.nodes() {
        match mode {
            CheckMode::Global => {
                for v in net.nodes().filter(|&v| v != u) {
                    visit(u, v)?;
                }
            }
            CheckMode::Local => {
                for &v in net.neighbors(u)? {
                    visit(u, v)?;
                }
            }
        }
    }
    let worst_eps = worst.map_or(0.0, |(_, e)| e);
    Ok(DistributionCheck {
        mode,
        epsilon,
        satisfied: worst_eps <= epsilon,
        worst_pair: worst.map(|(p, _)| p),
        worst_eps,
        pairs_checked: count,
    })
}

pub fn check_max_distribution(
    model: &CouplingModel,
    net: &Network,
    t: f64,
    epsilon: f64,
    mode: CheckMode,
) -> Result<DistributionCheck> {
    let rates = net
        .nodes()
        .map(|u| spatial_td_rate(model, net, u, t))
        .collect::<Result<Vec<_>>>()?;
    check_rates(net, &rates, epsilon, mode)
}

/// `Σ_{z∈𝒩_u} [∂∇_z/∂∇_u − (∂/∂∇_u − ∂/∂∇_z)∇_{u,z}]`, which equals `□_u`
/// by the spatial dynamics identity.
pub fn rearranged_spatial_rate(
    model: &CouplingModel,
    net: &Network,
    u: NodeId,
    t: f64,
) -> Result<f64> {
    net.neighbors(u)?.iter().try_fold(0.0, |acc, &z| {
        let reverse = spatial_derivative_at(model, z, u, 1, t)?;
        let link = link_derivative(model, u, z, u, 1, t)? - link_derivative(model, u, z, z, 1, t)?;
        Ok(acc + reverse - link)
    })
}

/// Ratio of the rearranged spatial rates of `u` and `v`, minus `Δ_{u,v}`.
pub fn equivalent_condition_residual(
    model: &CouplingModel,
    net: &Network,
    u: NodeId,
    v: NodeId,
    t: f64,
) -> Result<f64> {
    let den = rearranged_spatial_rate(model, net, v, t)?;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::ZeroDenominatorRate(v));
    }
    let ratio = rearranged_spatial_rate(model, net, u, t)? / den;
    Ok(ratio - distribution_ratio(model, net, u, v, t)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::coupling::Coupling;
    use crate::expr::Expr;

    fn path_model(scales: &[f64]) -> (Network, CouplingModel) {
        let n = scales.len();
        let links: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        let net = Network::new(n, &links).unwrap();
        let mut m = CouplingModel::new();
        for &(a, b) in &links {
            m.insert(
                &net,
                a,
                b,
                Coupling::affine(scales[a], 1.0, Expr::Const(1.0)),
            )
            .unwrap();
            m.insert(
                &net,
                b,
                a,
                Coupling::affine(scales[b], 1.0, Expr::Const(1.0)),
            )
            .unwrap();
        }
        (net, m)
    }

    #[test]
    fn ratio_arithmetic() {
        let r = DistributionRatio::from_rates(2.0, 4.0, 1).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.epsilon, 0.5);
        assert_eq!(
            DistributionRatio::from_rates(2.0, 0.0, 7),
            Err(Error::ZeroDenominatorRate(7))
        );
    }

    #[test]
    fn identical_couplings_are_maximal() {
        let net = Network::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut m = CouplingModel::new();
        for (a, b) in net.links() {
            m.insert(&net, a, b, Coupling::affine(1.5, 0.0, Expr::Const(1.0)))
                .unwrap();
            m.insert(&net, b, a, Coupling::affine(1.5, 0.0, Expr::Const(1.0)))
                .unwrap();
        }
        assert_eq!(
            distribution_ratio(&m, &net, 0, 1, 0.0).unwrap().epsilon,
            0.0
        );
        for mode in [CheckMode::Global, CheckMode::Local] {
            assert!(
                check_max_distribution(&m, &net, 0.0, 0.0, mode)
                    .unwrap()
                    .satisfied
            );
        }
    }

    #[test]
    fn doubled_rate_on_path() {
        // rates: □_0 = 1, □_1 = 2 + 2 = 4 when node 1 is doubled, □_2 = 1
        let (net, m) = path_model(&[1.0, 2.0, 1.0]);
        for mode in [CheckMode::Global, CheckMode::Local] {
            let c = check_max_distribution(&m, &net, 0.0, 0.1, mode).unwrap();
            assert!(!c.satisfied);
            assert_eq!(c.worst_pair, Some((1, 0)));
            assert_eq!(c.worst_eps, 3.0);
        }
    }

    #[test]
    fn zero_rate_reports_node() {
        let (net, m) = path_model(&[1.0, 0.0, 1.0]);
        assert_eq!(
            check_max_distribution(&m, &net, 0.0, 0.1, CheckMode::Local),
            Err(Error::ZeroDenominatorRate(1))
        );
    }

    #[test]
    fn rearranged_rate_matches_spatial_rate() {
        let (net, m) = path_model(&[1.0, 2.0, 3.0]);
        for u in 0..3 {
            let a = rearranged_spatial_rate(&m, &net, u, 0.0).unwrap();
            let b = spatial_td_rate(&m, &net, u, 0.0).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(
            equivalent_condition_residual(&m, &net, 0, 2, 0.0)
                .unwrap()
                .abs()
                < 1e-12
        );
    }
}
