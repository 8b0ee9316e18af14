//! Power-optimized communication planning.
//!
//! Pick node divergences `∇ > 0` minimizing `Π_u ∇_u` (solved as
//! `Σ_u log ∇_u`) subject to
//!
//! * capacity: `𝒯_uv·θ(∇) ≤ 𝒞_uv` for every linked ordered pair with demand,
//! * rate limit: `|∇_u − ∇⁰_u| / dt ≤ m` around the observed divergences `∇⁰`,
//! * box bounds `∇_min ≤ ∇_u ≤ ∇_max`.
//!
//! `θ` is the closed-form throughput estimate with routes and coefficients
//! frozen at `∇⁰`. It grows with every `∇_u`, so lowering divergences never
//! hurts capacity; a feasible plan therefore never needs to leave the lower
//! face of the rate-limit box, and infeasibility means capacity is violated
//! even there.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, NodeId};
use crate::routing::{route_pairs, RouteTable, Router};
use crate::throughput::experiment::{
    controlled_divergence, CAPACITY_PER_MARGINAL, DEFAULT_CONTROL_ROUNDS, TRANSIT_PER_MARGINAL,
};
use crate::throughput::{classify, FrozenThroughput, SplitScheme, DEFAULT_FLOOR};
use crate::topology::{gen_ring, DEFAULT_RING_BACKBONE, DEFAULT_RING_BRANCHES};
use crate::traffic::{gen_traffic_for, CapacityMatrix, TrafficMatrix};

pub const DEFAULT_MIN_DIVERGENCE: f64 = 1e-3;
pub const DEFAULT_MAX_DIVERGENCE: f64 = 1e6;
pub const DEFAULT_ITERATIONS: usize = 5_000;
pub const DEFAULT_GRADIENT_TOL: f64 = 1e-8;
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-6;
pub const RING_MARGINAL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: DEFAULT_ITERATIONS,
            gradient_tol: DEFAULT_GRADIENT_TOL,
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlanConstraint {
    Capacity { source: NodeId, target: NodeId },
    RateLimit { node: NodeId },
    Lower { node: NodeId },
    Upper { node: NodeId },
}

impl fmt::Display for PlanConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanConstraint::Capacity { source, target } => write!(f, "capacity {source}->{target}"),
            PlanConstraint::RateLimit { node } => write!(f, "rate limit at {node}"),
            PlanConstraint::Lower { node } => write!(f, "lower bound at {node}"),
            PlanConstraint::Upper { node } => write!(f, "upper bound at {node}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanProblem {
    pub net: Network,
    pub tm: TrafficMatrix,
    pub cm: CapacityMatrix,
    /// `m`, divergence units per second.
    pub rate_limit: f64,
    /// Observed divergences, indexed by node.
    pub observed: Vec<f64>,
    /// `∇⁰`: the observation lifted into the box bounds, since the program
    /// only admits positive divergences.
    pub baseline: Vec<f64>,
    pub dt: f64,
    /// `(∇_min, ∇_max)` per node.
    pub bounds: Vec<(f64, f64)>,
    pub routes: RouteTable,
    pub throughput: FrozenThroughput,
    pub options: SolverOptions,
}

impl PlanProblem {
    /// Routes are chosen divergence-aware at the observation and then frozen.
    pub fn new(
        net: Network,
        tm: TrafficMatrix,
        cm: CapacityMatrix,
        rate_limit: f64,
        observed: Vec<f64>,
        dt: f64,
    ) -> Result<Self> {
        if !(rate_limit > 0.0 && rate_limit.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rate limit must be > 0, got {rate_limit}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        if observed.len() != net.node_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} observed divergences, got {}",
                net.node_count(),
                observed.len()
            )));
        }
        if observed.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "observed divergences must be finite".into(),
            ));
        }
        tm.check_network(&net)?;
        let pairs: Vec<_> = tm.demands().iter().map(|&(u, v, _)| (u, v)).collect();
        let routes = route_pairs(&net, &observed, &pairs, Router::td_aware())?;
        let split = SplitScheme::length_proportional(&routes, &observed, DEFAULT_FLOOR);
        let throughput = FrozenThroughput::new(&net, &tm, &routes, &split, classify(&net))?;
        let bounds = vec![(DEFAULT_MIN_DIVERGENCE, DEFAULT_MAX_DIVERGENCE); net.node_count()];
        let baseline = lift(&observed, &bounds);
        Ok(PlanProblem {
            net,
            tm,
            cm,
            rate_limit,
            observed,
            baseline,
            dt,
            bounds,
            routes,
            throughput,
            options: SolverOptions::default(),
        })
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper >= lower) {
            return Err(Error::InvalidArgument(format!(
                "bounds must satisfy 0 < {lower} <= {upper}"
            )));
        }
        self.bounds = vec![(lower, upper); self.net.node_count()];
        self.baseline = lift(&self.observed, &self.bounds);
        Ok(self)
    }

    /// Intersection of the box bounds with the rate-limit interval.
    pub fn trust_region(&self, u: NodeId) -> (f64, f64) {
        let r = self.rate_limit * self.dt;
        let (lo, hi) = self.bounds[u];
        (lo.max(self.baseline[u] - r), hi.min(self.baseline[u] + r))
    }

    /// `(source, target, 𝒯, 𝒞)` for every linked ordered pair with demand.
    pub fn capacity_pairs(&self) -> Vec<(NodeId, NodeId, f64, f64)> {
        self.tm
            .demands()
            .into_iter()
            .filter(|&(u, v, _)| self.net.is_adjacent(u, v))
            .map(|(u, v, d)| (u, v, d, self.cm.get(u, v)))
            .collect()
    }
}

fn lift(observed: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    observed
        .iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| x.clamp(lo, hi))
        .collect()
}

/// Ring robot network: the default backbone-and-branches layout, all-to-all
/// demand with marginal `RING_MARGINAL`, link capacity equal to the marginal,
/// and divergences observed under divergence-aware control.
pub fn ring_problem(rate_limit: f64, dt: f64, seed: u64) -> Result<PlanProblem> {
    let net = gen_ring(DEFAULT_RING_BACKBONE, &DEFAULT_RING_BRANCHES)?;
    let ids: Vec<NodeId> = net.nodes().collect();
    let tm = gen_traffic_for(ids.clone(), RING_MARGINAL, seed)?;
    let cm = CapacityMatrix::uniform(&net, ids, CAPACITY_PER_MARGINAL * RING_MARGINAL)?;
    let observed = planning_baseline(&net, &tm)?;
    PlanProblem::new(net, tm, cm, rate_limit, observed, dt)
}

/// Divergences of `tm` on `net` under divergence-aware control with transit
/// capacity proportional to the demand marginal.
pub fn planning_baseline(net: &Network, tm: &TrafficMatrix) -> Result<Vec<f64>> {
    controlled_divergence(
        net,
        tm,
        TRANSIT_PER_MARGINAL * tm.marginal(),
        DEFAULT_CONTROL_ROUNDS,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub constraint: PlanConstraint,
    /// Non-negative when satisfied; `-∞` (or `null` in JSON) for a capacity
    /// constraint at a point where `θ` is undefined.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSlacks {
    pub theta: Option<f64>,
    pub slacks: Vec<Slack>,
}

impl PlanSlacks {
    pub fn worst(&self) -> Option<&Slack> {
        self.slacks
            .iter()
            .min_by(|a, b| a.slack.total_cmp(&b.slack))
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.slacks.iter().all(|s| s.slack >= -tol)
    }
}

/// Every constraint re-evaluated at `divergences`, in the units of the
/// constraint itself.
pub fn verify_plan(p: &PlanProblem, divergences: &[f64]) -> PlanSlacks {
    let theta = p.throughput.theta(divergences).ok();
    let mut slacks = Vec::new();
    for (source, target, t, c) in p.capacity_pairs() {
        slacks.push(Slack {
            constraint: PlanConstraint::Capacity { source, target },
            slack: theta.map_or(f64::NEG_INFINITY, |th| c - t * th),
        });
    }
    for (node, &x) in divergences.iter().enumerate() {
        let (lo, hi) = p.bounds[node];
        slacks.push(Slack {
            constraint: PlanConstraint::RateLimit { node },
            slack: p.rate_limit - (x - p.baseline[node]).abs() / p.dt,
        });
        slacks.push(Slack {
            constraint: PlanConstraint::Lower { node },
            slack: x - lo,
        });
        slacks.push(Slack {
            constraint: PlanConstraint::Upper { node },
            slack: hi - x,
        });
    }
    PlanSlacks { theta, slacks }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub divergences: Vec<f64>,
    /// `Π_u ∇_u`.
    pub objective: f64,
    pub log_objective: f64,
    pub feasible: bool,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub max_violation: f64,
    /// The most violated constraint of an infeasible plan.
    pub violated: Option<PlanConstraint>,
}

impl PlanResult {
    fn at(x: Vec<f64>) -> Self {
        let log_objective = x.iter().map(|v| v.ln()).sum();
        PlanResult {
            objective: x.iter().product(),
            log_objective,
            divergences: x,
            feasible: false,
            kkt_residual: f64::INFINITY,
            iterations: 0,
            max_violation: 0.0,
            violated: None,
        }
    }

    /// `Err(Infeasible)` carrying the certificate when the plan is infeasible.
    pub fn require_feasible(self) -> Result<Self> {
        match (self.feasible, self.violated) {
            (true, _) => Ok(self),
            (false, Some(c)) => Err(Error::Infeasible {
                constraint: c.to_string(),
                violation: self.max_violation,
            }),
            (false, None) => Err(Error::NonConvergence {
                iterations: self.iterations,
                residual: self.kkt_residual,
            }),
        }
    }
}

/// Capacity constraints in bracket form, `g_k = 1 − 𝒞_k·B(∇) / (𝒯_k·2ℰ/ℋ)`,
/// which is smooth everywhere and equivalent to `𝒯_k θ ≤ 𝒞_k` where `B > 0`.
struct Capacity {
    demand: Vec<f64>,
    cap: Vec<f64>,
}

impl Capacity {
    fn eval(&self, p: &PlanProblem, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (b, db) = p.throughput.bracket_gradient(x);
        let k = p.throughput.scale();
        let g = self
            .demand
            .iter()
            .zip(&self.cap)
            .map(|(t, c)| 1.0 - c * b / (t * k))
            .collect();
        // every g_k is affine in B, so ∂B is returned once and scaled per constraint by callers
        (g, db)
    }
}

struct Lagrangian<'a> {
    p: &'a PlanProblem,
    cons: Capacity,
    lambda: Vec<f64>,
    rho: f64,
}

impl Lagrangian<'_> {
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (g, db) = self.cons.eval(self.p, x);
        let mut value: f64 = x.iter().map(|v| v.ln()).sum();
        let mut grad: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
        let k = self.p.throughput.scale();
        let mut weight = 0.0;
        for (i, gi) in g.iter().enumerate() {
            let shifted = (gi + self.lambda[i] / self.rho).max(0.0);
            value += 0.5 * self.rho * shifted * shifted - self.lambda[i].powi(2) / (2.0 * self.rho);
            // ∂g_i/∂x = −𝒞_i/(𝒯_i k) · ∂B/∂x
            weight += self.rho * shifted * (-self.cons.cap[i] / (self.cons.demand[i] * k));
        }
        for (gr, d) in grad.iter_mut().zip(&db) {
            *gr += weight * d;
        }
        (value, grad)
    }
}

fn project(p: &PlanProblem, x: &mut [f64]) {
    for (u, v) in x.iter_mut().enumerate() {
        let (lo, hi) = p.trust_region(u);
        *v = v.clamp(lo, hi);
    }
}

fn projected_step_norm(p: &PlanProblem, x: &[f64], grad: &[f64]) -> f64 {
    let mut y: Vec<f64> = x.iter().zip(grad).map(|(a, g)| a - g).collect();
    project(p, &mut y);
    x.iter()
        .zip(&y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Augmented Lagrangian on the capacity constraints, with the rate-limit and
/// box constraints handled by projection. Starts from the baseline projected
/// onto the trust region.
pub fn solve_plan(p: &PlanProblem) -> Result<PlanResult> {
    let opts = p.options;
    let n = p.net.node_count();
    for u in 0..n {
        let (lo, hi) = p.trust_region(u);
        if lo > hi {
            // the rate-limit interval misses the box
            let mut r = PlanResult::at(p.baseline.clone());
            r.max_violation = lo - hi;
            r.violated = Some(PlanConstraint::RateLimit { node: u });
            return Ok(r);
        }
    }
    let pairs = p.capacity_pairs();
    let mut lag = Lagrangian {
        p,
        cons: Capacity {
            demand: pairs.iter().map(|c| c.2).collect(),
            cap: pairs.iter().map(|c| c.3).collect(),
        },
        lambda: vec![0.0; pairs.len()],
        rho: 10.0,
    };
    let mut x = p.baseline.clone();
    project(p, &mut x);
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let mut last_violation = f64::INFINITY;
    let inner_budget = 200;

    while iterations < opts.max_iterations {
        // inner projected gradient with backtracking on the smooth merit function
        for _ in 0..inner_budget {
            if iterations >= opts.max_iterations {
                break;
            }
            iterations += 1;
            let (f0, grad) = lag.value_grad(&x);
            if projected_step_norm(p, &x, &grad) < opts.gradient_tol {
                break;
            }
            step = (step * 2.0).min(1e6);
            loop {
                let mut y: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                project(p, &mut y);
                let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
                let lin: f64 = grad.iter().zip(&d).map(|(g, di)| g * di).sum();
                let sq: f64 = d.iter().map(|v| v * v).sum();
                let (f1, _) = lag.value_grad(&y);
                if f1 <= f0 + lin + sq / (2.0 * step) || step < 1e-20 {
                    x = y;
                    break;
                }
                step *= 0.5;
            }
        }
        let (g, _) = lag.cons.eval(p, &x);
        let violation = g.iter().copied().fold(0.0, f64::max);
        for (l, gi) in lag.lambda.iter_mut().zip(&g) {
            *l = (*l + lag.rho * gi).max(0.0);
        }
        let grad = lagrangian_gradient(&lag, &x);
        let kkt = projected_step_norm(p, &x, &grad);
        if violation <= opts.feasibility_tol && kkt < opts.gradient_tol {
            break;
        }
        if violation > 0.25 * last_violation {
            lag.rho = (lag.rho * 10.0).min(1e12);
        }
        last_violation = violation;
    }

    let grad = lagrangian_gradient(&lag, &x);
    let kkt = projected_step_norm(p, &x, &grad);
    let slacks = verify_plan(p, &x);
    let mut r = PlanResult::at(x);
    r.iterations = iterations;
    r.kkt_residual = kkt;
    let worst = slacks.worst().cloned();
    r.max_violation = worst.as_ref().map_or(0.0, |s| (-s.slack).max(0.0));
    if slacks.satisfied(opts.feasibility_tol) {
        if kkt >= opts.gradient_tol {
            return Err(Error::NonConvergence {
                iterations,
                residual: kkt,
            });
        }
        r.feasible = true;
    } else {
        r.violated = worst.map(|s| s.constraint);
    }
    Ok(r)
}

/// Gradient of the plain Lagrangian `Σ log ∇ + Σ λ g` for the KKT residual.
fn lagrangian_gradient(lag: &Lagrangian<'_>, x: &[f64]) -> Vec<f64> {
    let (_, db) = lag.cons.eval(lag.p, x);
    let k = lag.p.throughput.scale();
    let weight: f64 = lag
        .lambda
        .iter()
        .enumerate()
        .map(|(i, l)| l * (-lag.cons.cap[i] / (lag.cons.demand[i] * k)))
        .sum();
    x.iter()
        .zip(&db)
        .map(|(v, d)| 1.0 / v + weight * d)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3(cap: f64, baseline: Vec<f64>, m: f64) -> PlanProblem {
        let net = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        let e = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let tm = TrafficMatrix::new((0..3).collect(), e).unwrap();
        let cm = CapacityMatrix::uniform(&net, (0..3).collect(), cap).unwrap();
        PlanProblem::new(net, tm, cm, m, baseline, 1.0).unwrap()
    }

    #[test]
    fn loose_constraints_reach_the_lower_bound() {
        let p = path3(1e9, vec![2.0, 3.0, 2.5], 1e3);
        let r = solve_plan(&p).unwrap();
        assert!(r.feasible);
        assert!(r
            .divergences
            .iter()
            .all(|&x| (x - DEFAULT_MIN_DIVERGENCE).abs() < 1e-12));
        assert!((r.objective / r.log_objective.exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rate_limit_keeps_plan_near_baseline() {
        let p = path3(1e9, vec![2.0, 3.0, 2.5], 0.5);
        let r = solve_plan(&p).unwrap();
        assert!(r.feasible);
        assert!((r.divergences[1] - 2.5).abs() < 1e-9);
        assert!(verify_plan(&p, &r.divergences).satisfied(1e-9));
    }

    #[test]
    fn tight_capacity_is_infeasible_with_certificate() {
        let p = path3(1e-6, vec![2.0, 3.0, 2.5], 0.5);
        let r = solve_plan(&p).unwrap();
        assert!(!r.feasible);
        assert!(matches!(r.violated, Some(PlanConstraint::Capacity { .. })));
        let worst = verify_plan(&p, &r.divergences);
        assert!(worst.worst().unwrap().slack < -1e-6);
        assert!(matches!(
            r.require_feasible(),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn perturbed_plan_breaks_the_rate_limit() {
        let p = path3(1e9, vec![2.0, 3.0, 2.5], 0.5);
        let mut x = solve_plan(&p).unwrap().divergences;
        x[2] = 0.5;
        let s = verify_plan(&p, &x);
        let bad = s.worst().unwrap();
        assert_eq!(bad.constraint, PlanConstraint::RateLimit { node: 2 });
        assert!(bad.slack < 0.0);
    }
}
