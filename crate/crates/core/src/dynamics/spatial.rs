//! Spatial divergence derivatives, the link/node derivative identity and the
//! spatial divergence rate.

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Var};
use crate::network::{Network, NodeId};

use super::coupling::CouplingModel;

/// `∂ⁿ∇_u/∂∇_vⁿ` as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialDerivative {
    /// Derivative of a declared relation `∇_u = h(∇_v)`.
    Direct(Expr),
    /// Derived from the reverse relation `∇_v = h(∇_u)`; holds
    /// `h', h'', …, h⁽ⁿ⁾` at the operating point.
    Inverse {
        node: NodeId,
        wrt: NodeId,
        forward: Vec<Expr>,
    },
}

impl SpatialDerivative {
    pub fn at(&self, t: f64) -> Result<f64> {
        match self {
            SpatialDerivative::Direct(e) => Ok(e.at(t)),
            SpatialDerivative::Inverse { node, wrt, forward } => {
                let values: Vec<f64> = forward.iter().map(|e| e.at(t)).collect();
                let inv =
                    inverse_derivatives(&values).ok_or(Error::SingularCoupling(*node, *wrt))?;
                Ok(*inv.last().expect("order >= 1"))
            }
        }
    }
}

/// Partial Bell polynomials `B[m][k](x_1, …)` for `m, k ≤ n`; `x[0]` is `x_1`.
fn partial_bell(n: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; n + 1]; n + 1];
    b[0][0] = 1.0;
    for m in 1..=n {
        for k in 1..=m {
            let mut acc = 0.0;
            let mut binom = 1.0; // C(m-1, i-1)
            for i in 1..=(m - k + 1) {
                acc += binom * x[i - 1] * b[m - i][k - 1];
                binom = binom * (m - i) as f64 / i as f64;
            }
            b[m][k] = acc;
        }
    }
    b
}

/// Derivatives `g', …, g⁽ⁿ⁾` of the inverse function from the forward
/// derivatives `h', …, h⁽ⁿ⁾`, via Faà di Bruno on `g(h(x)) = x`.
/// `None` when `h' = 0`.
pub fn inverse_derivatives(forward: &[f64]) -> Option<Vec<f64>> {
    let n = forward.len();
    let h1 = *forward.first()?;
    if h1 == 0.0 || !h1.is_finite() {
        return None;
    }
    let b = partial_bell(n, forward);
    let mut g = vec![0.0; n + 1];
    g[1] = 1.0 / h1;
    for m in 2..=n {
        let acc: f64 = (1..m).map(|k| g[k] * b[m][k]).sum();
        g[m] = -acc / h1.powi(m as i32);
    }
    Some(g[1..].to_vec())
}

/// `∂ⁿ∇_u/∂∇_vⁿ`. Uses the declared relation `(u, v)` when present, otherwise
/// inverts `(v, u)`.
pub fn spatial_derivative(
    model: &CouplingModel,
    u: NodeId,
    v: NodeId,
    order: usize,
) -> Result<SpatialDerivative> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "derivative order must be >= 1".into(),
        ));
    }
    if let Some(c) = model.relation(u, v) {
        return Ok(SpatialDerivative::Direct(
            c.derivative_expr(order, model.state(v)),
        ));
    }
    if let Some(c) = model.relation(v, u) {
        let x = model.state(u);
        let forward = (1..=order).map(|k| c.derivative_expr(k, x)).collect();
        return Ok(SpatialDerivative::Inverse {
            node: u,
            wrt: v,
            forward,
        });
    }
    Err(Error::NoCoupling(u, v))
}

pub fn spatial_derivative_at(
    model: &CouplingModel,
    u: NodeId,
    v: NodeId,
    order: usize,
    t: f64,
) -> Result<f64> {
    spatial_derivative(model, u, v, order)?.at(t)
}

/// First-order `∂∇_u/∂∇_v` for any pair joined by a chain of declared
/// couplings, composed by the chain rule.
pub fn chain_derivative(model: &CouplingModel, u: NodeId, v: NodeId, t: f64) -> Result<f64> {
    if u == v {
        return Ok(1.0);
    }
    let chain = model.coupling_chain(u, v).ok_or(Error::NoCoupling(u, v))?;
    chain.windows(2).try_fold(1.0, |acc, w| {
        Ok(acc * spatial_derivative_at(model, w[0], w[1], 1, t)?)
    })
}

/// `∂ⁿ∇_{a,b}/∂∇_wrtⁿ` with the link divergence written as `∇_a + ∇_b` in
/// the single variable `∇_wrt`.
pub fn link_derivative(
    model: &CouplingModel,
    a: NodeId,
    b: NodeId,
    wrt: NodeId,
    order: usize,
    t: f64,
) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "derivative order must be >= 1".into(),
        ));
    }
    let other = match wrt {
        w if w == a => b,
        w if w == b => a,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{wrt} is not an endpoint of link ({a}, {b})"
            )))
        }
    };
    if let Some(c) = model.relation(other, wrt) {
        // ∇_wrt + h(∇_wrt), differentiated as one expression tree
        let link = expr::add(Expr::x(), c.to_expr());
        return Ok(link.nth_derivative(Var::X, order).eval(t, model.state(wrt)));
    }
    if let Some(c) = model.relation(wrt, other) {
        let x = model.state(other);
        let forward: Vec<f64> = (1..=order).map(|k| c.derivative(k, x, t)).collect();
        let inv = inverse_derivatives(&forward).ok_or(Error::SingularCoupling(other, wrt))?;
        let identity = if order == 1 { 1.0 } else { 0.0 };
        return Ok(identity + inv[order - 1]);
    }
    Err(Error::NoCoupling(other, wrt))
}

/// Both sides of the spatial dynamics identity for the link `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialDynamicsCheck {
    /// `∂ⁿ∇_{u,v}/∂∇_uⁿ − ∂ⁿ∇_{u,v}/∂∇_vⁿ`.
    pub lhs: f64,
    /// `∂ⁿ∇_v/∂∇_uⁿ − ∂ⁿ∇_u/∂∇_vⁿ`.
    pub rhs: f64,
}

impl SpatialDynamicsCheck {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }
}

pub fn spatial_dynamics(
    model: &CouplingModel,
    u: NodeId,
    v: NodeId,
    order: usize,
    t: f64,
) -> Result<SpatialDynamicsCheck> {
    let lhs =
        link_derivative(model, u, v, u, order, t)? - link_derivative(model, u, v, v, order, t)?;
    let rhs = spatial_derivative_at(model, v, u, order, t)?
        - spatial_derivative_at(model, u, v, order, t)?;
    Ok(SpatialDynamicsCheck { lhs, rhs })
}

/// Residual `LHS − RHS` of the spatial dynamics identity.
pub fn check_spatial_dynamics(
    model: &CouplingModel,
    u: NodeId,
    v: NodeId,
    order: usize,
    t: f64,
) -> Result<f64> {
    Ok(spatial_dynamics(model, u, v, order, t)?.residual())
}

/// `□_u = Σ_{z∈𝒩_u} ∂∇_u/∂∇_z`.
pub fn spatial_td_rate(model: &CouplingModel, net: &Network, u: NodeId, t: f64) -> Result<f64> {
    net.neighbors(u)?.iter().try_fold(0.0, |acc, &z| {
        Ok(acc + spatial_derivative_at(model, u, z, 1, t)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::coupling::Coupling;

    fn pair_model(c: Coupling) -> (Network, CouplingModel) {
        let net = Network::new(2, &[(0, 1)]).unwrap();
        let mut m = CouplingModel::new();
        m.insert(&net, 0, 1, c).unwrap();
        (net, m)
    }

    #[test]
    fn affine_derivatives() {
        let (_, m) = pair_model(Coupling::affine(2.0, 5.0, Expr::Const(1.0)));
        assert_eq!(spatial_derivative_at(&m, 0, 1, 1, 0.0).unwrap(), 2.0);
        assert_eq!(spatial_derivative_at(&m, 0, 1, 2, 0.0).unwrap(), 0.0);
        // ∇_1 = (∇_0 − 5)/2
        assert_eq!(spatial_derivative_at(&m, 1, 0, 1, 0.0).unwrap(), 0.5);
        assert_eq!(spatial_derivative_at(&m, 1, 0, 2, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn missing_and_singular_couplings() {
        let (_, m) = pair_model(Coupling::affine(0.0, 1.0, Expr::Const(1.0)));
        assert_eq!(
            spatial_derivative_at(&m, 1, 0, 1, 0.0),
            Err(Error::SingularCoupling(1, 0))
        );
        assert_eq!(
            spatial_derivative(&m, 0, 7, 1).unwrap_err(),
            Error::NoCoupling(0, 7)
        );
        assert!(spatial_derivative(&m, 0, 1, 0).is_err());
    }

    #[test]
    fn inverse_derivative_formulas() {
        // h(x) = x^3 at x = 2: h' = 12, h'' = 12, h''' = 6
        let g = inverse_derivatives(&[12.0, 12.0, 6.0]).unwrap();
        assert!((g[0] - 1.0 / 12.0).abs() < 1e-15);
        assert!((g[1] + 12.0 / 12f64.powi(3)).abs() < 1e-15);
        let g3 = (3.0 * 144.0 - 12.0 * 6.0) / 12f64.powi(5);
        assert!((g[2] - g3).abs() < 1e-15);
        // exp/ln pair: h = e^x at 0 gives g = ln y at 1, g^(n)(1) = (-1)^(n-1) (n-1)!
        let g = inverse_derivatives(&[1.0; 5]).unwrap();
        let expected = [1.0, -1.0, 2.0, -6.0, 24.0];
        for (a, b) in g.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(inverse_derivatives(&[0.0, 1.0]).is_none());
    }

    #[test]
    fn identity_for_affine_orders_one_to_three() {
        let (_, m) = pair_model(Coupling::affine(
            2.0,
            5.0,
            Expr::parse("2 + cos(t)").unwrap(),
        ));
        for order in 1..=3 {
            for t in [0.0, 0.4, 2.0] {
                assert!(check_spatial_dynamics(&m, 0, 1, order, t).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_for_cubic_coupling() {
        let (_, mut m) = pair_model(Coupling::expr(Expr::parse("x^3").unwrap()));
        m.set_state(1, 2.0);
        let check = spatial_dynamics(&m, 0, 1, 1, 0.0).unwrap();
        // LHS = (1 + 1/12) − (1 + 12), RHS = 1/12 − 12
        assert!((check.lhs - (1.0 / 12.0 - 12.0)).abs() < 1e-12);
        assert!(check.residual().abs() < 1e-12);
    }

    #[test]
    fn spatial_rates() {
        let net = Network::new(3, &[(0, 1), (0, 2)]).unwrap();
        let mut m = CouplingModel::new();
        m.insert(&net, 0, 1, Coupling::affine(2.0, 1.0, Expr::Const(1.0)))
            .unwrap();
        m.insert(&net, 0, 2, Coupling::affine(2.0, -3.0, Expr::Const(1.0)))
            .unwrap();
        assert_eq!(spatial_td_rate(&m, &net, 0, 0.0).unwrap(), 4.0);

        let (net, m) = pair_model(Coupling::affine(-2.0, 0.0, Expr::Const(1.0)));
        assert_eq!(spatial_td_rate(&m, &net, 0, 0.0).unwrap(), -2.0);

        let lonely = Network::new(1, &[]).unwrap();
        assert_eq!(
            spatial_td_rate(&CouplingModel::new(), &lonely, 0, 0.0).unwrap(),
            0.0
        );
        assert_eq!(
            spatial_td_rate(&CouplingModel::new(), &net, 0, 0.0),
            Err(Error::NoCoupling(0, 1))
        );
    }

    #[test]
    fn chain_rule_across_non_neighbors() {
        let net = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        let mut m = CouplingModel::new();
        m.insert(&net, 0, 1, Coupling::affine(3.0, 0.0, Expr::Const(1.0)))
            .unwrap();
        m.insert(&net, 2, 1, Coupling::affine(2.0, 0.0, Expr::Const(1.0)))
            .unwrap();
        // ∂∇_0/∂∇_2 = (∂∇_0/∂∇_1)(∂∇_1/∂∇_2) = 3 · 1/2
        assert!((chain_derivative(&m, 0, 2, 0.0).unwrap() - 1.5).abs() < 1e-15);
    }
}
