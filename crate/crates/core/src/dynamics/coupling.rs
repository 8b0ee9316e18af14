//! Functional relations between node divergences.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Var};
use crate::network::{Network, NodeId};
use crate::FORMAT_TAG;

/// `∇_u` as a function of a neighbor's divergence `x` and time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Coupling {
    /// `∇_u = (m·x + n)·g(t)`.
    Affine { m: f64, n: f64, g: Expr },
    /// Arbitrary differentiable expression in `x` and `t`.
    Expr { h: Expr },
}

impl Coupling {
    pub fn affine(m: f64, n: f64, g: Expr) -> Self {
        Coupling::Affine { m, n, g }
    }

    pub fn expr(h: Expr) -> Self {
        Coupling::Expr { h }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Coupling::Affine { m, n, g } => expr::mul(
                expr::add(expr::mul(Expr::Const(*m), Expr::x()), Expr::Const(*n)),
                g.clone(),
            ),
            Coupling::Expr { h } => h.clone(),
        }
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self {
            Coupling::Affine { m, n, g } => (m * x + n) * g.at(t),
            Coupling::Expr { h } => h.eval(t, x),
        }
    }

    /// `d^order h / dx^order` at the operating point `x`, as a function of `t`.
    pub fn derivative_expr(&self, order: usize, x: f64) -> Expr {
        match self {
            Coupling::Affine { m, g, .. } => match order {
                0 => self.to_expr().bind(Var::X, x),
                1 => expr::mul(Expr::Const(*m), g.clone()),
                _ => Expr::Const(0.0),
            },
            Coupling::Expr { h } => h.nth_derivative(Var::X, order).bind(Var::X, x),
        }
    }

    pub fn derivative(&self, order: usize, x: f64, t: f64) -> f64 {
        match self {
            Coupling::Affine { m, g, .. } => match order {
                0 => self.value(x, t),
                1 => m * g.at(t),
                _ => 0.0,
            },
            Coupling::Expr { h } => h.nth_derivative(Var::X, order).eval(t, x),
        }
    }
}

/// Declared couplings plus the operating point at which derivatives are taken.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingModel {
    /// `(u, z)` → `∇_u = h(∇_z, t)`.
    relations: BTreeMap<(NodeId, NodeId), Coupling>,
    /// Divergence values at the operating point; missing nodes are at 0.
    state: BTreeMap<NodeId, f64>,
}

impl CouplingModel {
    pub fn new() -> Self {
        CouplingModel::default()
    }

    /// Declares `∇_u = h(∇_z)`; `u` and `z` must be adjacent.
    pub fn insert(
        &mut self,
        net: &Network,
        u: NodeId,
        z: NodeId,
        coupling: Coupling,
    ) -> Result<()> {
        net.check_node(u)?;
        net.check_node(z)?;
        if !net.is_adjacent(u, z) {
            return Err(Error::NotAdjacent(u, z));
        }
        self.relations.insert((u, z), coupling);
        Ok(())
    }

    pub fn set_state(&mut self, u: NodeId, divergence: f64) {
        self.state.insert(u, divergence);
    }

    pub fn state(&self, u: NodeId) -> f64 {
        self.state.get(&u).copied().unwrap_or(0.0)
    }

    pub fn relation(&self, u: NodeId, z: NodeId) -> Option<&Coupling> {
        self.relations.get(&(u, z))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &Coupling)> {
        self.relations.iter()
    }

    /// Either direction declared.
    pub fn is_coupled(&self, u: NodeId, z: NodeId) -> bool {
        self.relations.contains_key(&(u, z)) || self.relations.contains_key(&(z, u))
    }

    /// All relations reference adjacent node pairs of `net`.
    pub fn validate(&self, net: &Network) -> Result<()> {
        for &(u, z) in self.relations.keys() {
            net.check_node(u)?;
            net.check_node(z)?;
            if !net.is_adjacent(u, z) {
                return Err(Error::NotAdjacent(u, z));
            }
        }
        Ok(())
    }

    /// Shortest chain of declared couplings from `u` to `v`, both ends included.
    pub fn coupling_chain(&self, u: NodeId, v: NodeId) -> Option<Vec<NodeId>> {
        let mut graph: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(a, b) in self.relations.keys() {
            graph.entry(a).or_default().push(b);
            graph.entry(b).or_default().push(a);
        }
        for list in graph.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let mut prev: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut queue = VecDeque::from([u]);
        prev.insert(u, u);
        while let Some(a) = queue.pop_front() {
            if a == v {
                let mut chain = vec![v];
                let mut cur = v;
                while cur != u {
                    cur = prev[&cur];
                    chain.push(cur);
                }
                chain.reverse();
                return Some(chain);
            }
            for &b in graph.get(&a).map(Vec::as_slice).unwrap_or(&[]) {
                if let std::collections::btree_map::Entry::Vacant(e) = prev.entry(b) {
                    e.insert(a);
                    queue.push_back(b);
                }
            }
        }
        None
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CouplingFile {
            format: FORMAT_TAG.to_string(),
            couplings: self
                .relations
                .iter()
                .map(|(&(node, wrt), c)| CouplingEntry {
                    node,
                    wrt,
                    coupling: c.clone(),
                })
                .collect(),
            state: self.state.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(src: &str, net: &Network) -> Result<Self> {
        let file: CouplingFile = serde_json::from_str(src)?;
        if file.format != FORMAT_TAG {
            return Err(Error::Format(format!(
                "expected format '{FORMAT_TAG}', found '{}'",
                file.format
            )));
        }
        let mut model = CouplingModel::new();
        for entry in file.couplings {
            model.insert(net, entry.node, entry.wrt, entry.coupling)?;
        }
        model.state = file.state;
        Ok(model)
    }

    pub fn load(path: &Path, net: &Network) -> Result<Self> {
        CouplingModel::from_json(&std::fs::read_to_string(path)?, net)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CouplingFile {
    format: String,
    couplings: Vec<CouplingEntry>,
    #[serde(default)]
    state: BTreeMap<NodeId, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CouplingEntry {
    node: NodeId,
    wrt: NodeId,
    #[serde(flatten)]
    coupling: Coupling,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_matches_its_expression_form() {
        let c = Coupling::affine(2.0, 5.0, Expr::parse("1 + sin(t)").unwrap());
        let e = c.to_expr();
        for &(x, t) in &[(0.3, 0.1), (-2.0, 4.0)] {
            assert!((c.value(x, t) - e.eval(t, x)).abs() < 1e-12);
            let d = e.derivative(Var::X).eval(t, x);
            assert!((c.derivative(1, x, t) - d).abs() < 1e-12);
        }
        assert_eq!(c.derivative(2, 1.0, 1.0), 0.0);
    }

    #[test]
    fn insert_requires_adjacency() {
        let net = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        let mut m = CouplingModel::new();
        let c = Coupling::affine(1.0, 0.0, Expr::Const(1.0));
        assert!(m.insert(&net, 0, 1, c.clone()).is_ok());
        assert_eq!(m.insert(&net, 0, 2, c), Err(Error::NotAdjacent(0, 2)));
    }

    #[test]
    fn chain_search() {
        let net = Network::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut m = CouplingModel::new();
        let c = Coupling::affine(1.0, 0.0, Expr::Const(1.0));
        m.insert(&net, 0, 1, c.clone()).unwrap();
        m.insert(&net, 2, 1, c).unwrap();
        assert_eq!(m.coupling_chain(0, 2), Some(vec![0, 1, 2]));
        assert_eq!(m.coupling_chain(0, 3), None);
    }

    #[test]
    fn json_round_trip() {
        let net = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        let mut m = CouplingModel::new();
        m.insert(
            &net,
            0,
            1,
            Coupling::affine(2.0, 5.0, Expr::parse("cos(t)").unwrap()),
        )
        .unwrap();
        m.insert(&net, 2, 1, Coupling::expr(Expr::parse("x^3").unwrap()))
            .unwrap();
        m.set_state(1, 2.0);
        let text = m.to_json().unwrap();
        assert!(text.contains("\"family\": \"affine\""));
        assert!(text.contains("\"family\": \"expr\""));
        assert_eq!(CouplingModel::from_json(&text, &net).unwrap(), m);
    }
}
