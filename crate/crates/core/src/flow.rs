//! Time-parameterized directed flow rates on adjacent node pairs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::network::{Network, NodeId};
use crate::FORMAT_TAG;

/// Composite Simpson intervals used for windowed averages.
const SIMPSON_INTERVALS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EvalMode {
    /// Instantaneous rate (window shrinking to zero).
    #[default]
    Instantaneous,
    /// Mean rate over `[t, t + delta]`.
    Windowed { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowFn {
    Expr(Expr),
    /// `(t, rate)` samples sorted by time, linearly interpolated and held
    /// constant outside the sampled range.
    Series(Vec<(f64, f64)>),
}

impl FlowFn {
    pub fn constant(rate: f64) -> Self {
        FlowFn::Expr(Expr::Const(rate))
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(FlowFn::Expr(Expr::parse(src)?))
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            FlowFn::Expr(e) => e.at(t),
            FlowFn::Series(samples) => interpolate(samples, t),
        }
    }

    pub fn windowed(&self, t: f64, delta: f64) -> f64 {
        if delta <= 0.0 {
            return self.value(t);
        }
        let n = SIMPSON_INTERVALS;
        let h = delta / n as f64;
        let mut acc = self.value(t) + self.value(t + delta);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.value(t + i as f64 * h);
        }
        acc * h / 3.0 / delta
    }

    pub fn eval_mode(&self, t: f64, mode: EvalMode) -> f64 {
        match mode {
            EvalMode::Instantaneous => self.value(t),
            EvalMode::Windowed { delta } => self.windowed(t, delta),
        }
    }

    /// Symbolic time derivative, or `None` for tabulated series.
    pub fn time_derivative(&self) -> Option<Expr> {
        match self {
            FlowFn::Expr(e) => Some(e.derivative(Var::T)),
            FlowFn::Series(_) => None,
        }
    }
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    match samples {
        [] => 0.0,
        [(_, v)] => *v,
        _ => {
            let first = samples[0];
            let last = samples[samples.len() - 1];
            if t <= first.0 {
                return first.1;
            }
            if t >= last.0 {
                return last.1;
            }
            let i = samples.partition_point(|(ts, _)| *ts <= t);
            let (t0, v0) = samples[i - 1];
            let (t1, v1) = samples[i];
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowField {
    entries: BTreeMap<(NodeId, NodeId), FlowFn>,
    bound: Option<f64>,
}

impl FlowField {
    pub fn new() -> Self {
        FlowField::default()
    }

    pub fn with_bound(bound: f64) -> Self {
        FlowField {
            entries: BTreeMap::new(),
            bound: Some(bound),
        }
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn set_bound(&mut self, bound: Option<f64>) {
        self.bound = bound;
    }

    /// Registers the flow from `u` to `v`, replacing any previous entry.
    pub fn insert(&mut self, net: &Network, u: NodeId, v: NodeId, flow: FlowFn) -> Result<()> {
        net.check_node(u)?;
        net.check_node(v)?;
        if !net.is_adjacent(u, v) {
            return Err(Error::NotAdjacent(u, v));
        }
        match &flow {
            FlowFn::Expr(e) if e.depends_on(Var::X) => {
                return Err(Error::Parse(format!(
                    "flow {u}->{v} may only depend on t, got '{e}'"
                )));
            }
            FlowFn::Series(s) if s.windows(2).any(|w| w[0].0 >= w[1].0) => {
                return Err(Error::Parse(format!(
                    "flow {u}->{v}: series times must increase"
                )));
            }
            _ => {}
        }
        self.entries.insert((u, v), flow);
        Ok(())
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> Option<&FlowFn> {
        self.entries.get(&(u, v))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &FlowFn)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Instantaneous rate from `u` to `v`; absent adjacent flows are zero.
    pub fn evaluate(&self, net: &Network, u: NodeId, v: NodeId, t: f64) -> Result<f64> {
        self.evaluate_mode(net, u, v, t, EvalMode::Instantaneous)
    }

    pub fn evaluate_mode(
        &self,
        net: &Network,
        u: NodeId,
        v: NodeId,
        t: f64,
        mode: EvalMode,
    ) -> Result<f64> {
        net.check_node(u)?;
        net.check_node(v)?;
        if !net.is_adjacent(u, v) {
            return Err(Error::NotAdjacent(u, v));
        }
        let Some(flow) = self.entries.get(&(u, v)) else {
            return Ok(0.0);
        };
        let value = flow.eval_mode(t, mode);
        if value.is_nan() || value < 0.0 {
            return Err(Error::FlowNegative {
                from: u,
                to: v,
                t,
                value,
            });
        }
        if let Some(bound) = self.bound {
            if value > bound {
                return Err(Error::FlowBoundExceeded {
                    from: u,
                    to: v,
                    t,
                    value,
                    bound,
                });
            }
        }
        Ok(value)
    }

    /// Time derivative of the instantaneous rate from `u` to `v`.
    pub fn rate_derivative(&self, net: &Network, u: NodeId, v: NodeId, t: f64) -> Result<f64> {
        net.check_node(u)?;
        net.check_node(v)?;
        if !net.is_adjacent(u, v) {
            return Err(Error::NotAdjacent(u, v));
        }
        match self.entries.get(&(u, v)) {
            None => Ok(0.0),
            Some(flow) => flow
                .time_derivative()
                .map(|d| d.at(t))
                .ok_or(Error::NonDifferentiableFlow { from: u, to: v }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = FlowFile {
            format: FORMAT_TAG.to_string(),
            flows: self
                .entries
                .iter()
                .map(|(&(from, to), f)| match f {
                    FlowFn::Expr(e) => FlowEntry {
                        from,
                        to,
                        expr: Some(e.clone()),
                        series: None,
                    },
                    FlowFn::Series(s) => FlowEntry {
                        from,
                        to,
                        expr: None,
                        series: Some(s.iter().map(|&(t, v)| [t, v]).collect()),
                    },
                })
                .collect(),
            bound: self.bound,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses a flow file and validates every entry against `net`.
    pub fn from_json(src: &str, net: &Network) -> Result<Self> {
        let file: FlowFile = serde_json::from_str(src)?;
        if file.format != FORMAT_TAG {
            return Err(Error::Format(format!(
                "expected format '{FORMAT_TAG}', found '{}'",
                file.format
            )));
        }
        let mut field = FlowField {
            entries: BTreeMap::new(),
            bound: file.bound,
        };
        for entry in file.flows {
            let flow = match (entry.expr, entry.series) {
                (Some(e), None) => FlowFn::Expr(e),
                (None, Some(s)) => FlowFn::Series(s.into_iter().map(|[t, v]| (t, v)).collect()),
                _ => {
                    return Err(Error::Format(format!(
                        "flow {}->{} needs exactly one of 'expr' or 'series'",
                        entry.from, entry.to
                    )))
                }
            };
            field.insert(net, entry.from, entry.to, flow)?;
        }
        Ok(field)
    }

    pub fn load(path: &Path, net: &Network) -> Result<Self> {
        FlowField::from_json(&std::fs::read_to_string(path)?, net)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FlowFile {
    format: String,
    flows: Vec<FlowEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FlowEntry {
    from: NodeId,
    to: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expr: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    series: Option<Vec<[f64; 2]>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn edge() -> Network {
        Network::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn sine_flow_sign_analysis() {
        let net = edge();
        let mut field = FlowField::new();
        field
            .insert(&net, 0, 1, FlowFn::parse("sin(t)").unwrap())
            .unwrap();
        assert_eq!(field.evaluate(&net, 0, 1, 0.0).unwrap(), 0.0);
        assert!(matches!(
            field.evaluate(&net, 0, 1, 1.5 * PI),
            Err(Error::FlowNegative { from: 0, to: 1, .. })
        ));
    }

    #[test]
    fn constant_and_absent_flows() {
        let net = edge();
        let mut field = FlowField::new();
        field.insert(&net, 0, 1, FlowFn::constant(4.0)).unwrap();
        assert_eq!(field.evaluate(&net, 0, 1, 17.0).unwrap(), 4.0);
        assert_eq!(field.evaluate(&net, 1, 0, 17.0).unwrap(), 0.0);
        assert_eq!(
            field.evaluate(&net, 0, 2, 0.0),
            Err(Error::NotAdjacent(0, 2))
        );
        assert_eq!(
            field.insert(&net, 0, 2, FlowFn::constant(1.0)),
            Err(Error::NotAdjacent(0, 2))
        );
    }

    #[test]
    fn bound_is_enforced() {
        let net = edge();
        let mut field = FlowField::with_bound(2.0);
        field
            .insert(&net, 1, 2, FlowFn::parse("t").unwrap())
            .unwrap();
        assert!(field.evaluate(&net, 1, 2, 1.0).is_ok());
        assert!(matches!(
            field.evaluate(&net, 1, 2, 3.0),
            Err(Error::FlowBoundExceeded { .. })
        ));
    }

    #[test]
    fn windowed_mean_uses_simpson() {
        let net = edge();
        let mut field = FlowField::new();
        field
            .insert(&net, 0, 1, FlowFn::parse("t^2").unwrap())
            .unwrap();
        // mean of t^2 over [1, 3] = (27 - 1) / 3 / 2
        let mean = field
            .evaluate_mode(&net, 0, 1, 1.0, EvalMode::Windowed { delta: 2.0 })
            .unwrap();
        assert!((mean - 26.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn series_interpolation_and_derivative() {
        let net = edge();
        let mut field = FlowField::new();
        field
            .insert(&net, 0, 1, FlowFn::Series(vec![(0.0, 1.0), (2.0, 3.0)]))
            .unwrap();
        assert_eq!(field.evaluate(&net, 0, 1, 1.0).unwrap(), 2.0);
        assert_eq!(field.evaluate(&net, 0, 1, -1.0).unwrap(), 1.0);
        assert_eq!(field.evaluate(&net, 0, 1, 9.0).unwrap(), 3.0);
        assert_eq!(
            field.rate_derivative(&net, 0, 1, 1.0),
            Err(Error::NonDifferentiableFlow { from: 0, to: 1 })
        );
        assert!(field
            .insert(&net, 1, 0, FlowFn::Series(vec![(1.0, 1.0), (1.0, 3.0)]))
            .is_err());
    }

    #[test]
    fn json_round_trip() {
        let net = edge();
        let mut field = FlowField::with_bound(10.0);
        field
            .insert(&net, 0, 1, FlowFn::parse("1 + sin(t)").unwrap())
            .unwrap();
        field
            .insert(&net, 2, 1, FlowFn::Series(vec![(0.0, 0.5), (1.0, 0.25)]))
            .unwrap();
        let text = field.to_json().unwrap();
        assert_eq!(FlowField::from_json(&text, &net).unwrap(), field);
    }

    #[test]
    fn rejects_coupling_argument_in_flows() {
        let net = edge();
        let mut field = FlowField::new();
        assert!(field
            .insert(&net, 0, 1, FlowFn::parse("x + 1").unwrap())
            .is_err());
    }
}
