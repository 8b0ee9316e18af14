//! Route coefficients and split ratios.
//!
//! For a route `ρ` with divergence sum `S_ρ = max(Σ_{w∈ρ} |∇_w|, floor)`, the
//! coefficient is length-proportional, `α_ρ = |ρ|·c`, with `c` chosen so that
//! `Σ_ρ α_ρ / S_ρ = 1`. The split ratio is `β_ρ = α_ρ / S_ρ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::network::NodeId;
use crate::routing::{RouteSet, RouteTable};

pub const DEFAULT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSplit {
    /// `|ρ|` per route.
    pub lengths: Vec<usize>,
    /// Regularized divergence sums `S_ρ`.
    pub sums: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl PairSplit {
    pub fn compute(set: &RouteSet, td: &[f64], floor: f64) -> Self {
        let lengths: Vec<usize> = set.routes.iter().map(|r| r.len()).collect();
        let sums: Vec<f64> = set
            .routes
            .iter()
            .map(|r| {
                r.nodes()
                    .iter()
                    .map(|&w| td[w].abs())
                    .sum::<f64>()
                    .max(floor)
            })
            .collect();
        let inv: f64 = lengths.iter().zip(&sums).map(|(&l, s)| l as f64 / s).sum();
        let c = 1.0 / inv;
        let alphas: Vec<f64> = lengths.iter().map(|&l| l as f64 * c).collect();
        let betas = alphas.iter().zip(&sums).map(|(a, s)| a / s).collect();
        PairSplit {
            lengths,
            sums,
            alphas,
            betas,
        }
    }

    pub fn beta_sum(&self) -> f64 {
        self.betas.iter().sum()
    }

    /// Indices of routes whose coefficient is not below 1.
    pub fn alpha_violations(&self) -> Vec<usize> {
        (0..self.alphas.len())
            .filter(|&i| self.alphas[i] >= 1.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScheme {
    pub floor: f64,
    pub pairs: BTreeMap<(NodeId, NodeId), PairSplit>,
}

impl SplitScheme {
    pub fn length_proportional(routes: &RouteTable, td: &[f64], floor: f64) -> Self {
        SplitScheme {
            floor,
            pairs: routes
                .iter()
                .map(|(&pair, set)| (pair, PairSplit::compute(set, td, floor)))
                .collect(),
        }
    }

    /// Equal shares per route, ignoring divergence.
    pub fn equal(routes: &RouteTable) -> Self {
        let pairs = routes
            .iter()
            .map(|(&pair, set)| {
                let n = set.len();
                let lengths: Vec<usize> = set.routes.iter().map(|r| r.len()).collect();
                let share = 1.0 / n as f64;
                (
                    pair,
                    PairSplit {
                        sums: vec![1.0; n],
                        alphas: vec![share; n],
                        betas: vec![share; n],
                        lengths,
                    },
                )
            })
            .collect();
        SplitScheme {
            floor: DEFAULT_FLOOR,
            pairs,
        }
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> Option<&PairSplit> {
        self.pairs.get(&(u, v))
    }

    /// Pairs and route indices with `α ≥ 1`.
    pub fn alpha_violations(&self) -> Vec<((NodeId, NodeId), usize)> {
        self.pairs
            .iter()
            .flat_map(|(&p, s)| s.alpha_violations().into_iter().map(move |i| (p, i)))
            .collect()
    }
}
