//! Switch-level demand and capacity matrices.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{Network, NodeId};

const SINKHORN_SWEEPS: usize = 10_000;
/// Marginal deviation accepted by Sinkhorn, relative to the marginal; keeps
/// the scaled matrix well inside the 1e-9 absolute contract.
const SINKHORN_TOL: f64 = 1e-12;

/// Square matrix indexed by the positions of `ids`.
#[derive(Debug, Clone, PartialEq)]
struct Dense {
    ids: Vec<NodeId>,
    entries: Vec<Vec<f64>>,
}

impl Dense {
    fn index_of(&self, u: NodeId) -> Option<usize> {
        self.ids.iter().position(|&x| x == u)
    }

    fn get(&self, u: NodeId, v: NodeId) -> f64 {
        match (self.index_of(u), self.index_of(v)) {
            (Some(i), Some(j)) => self.entries[i][j],
            _ => 0.0,
        }
    }

    fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.ids.iter().map(|u| u.to_string()))?;
        for row in &self.entries {
            // `{:?}` prints the shortest representation that round-trips
            w.write_record(row.iter().map(|x| format!("{x:?}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    fn from_csv(src: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(src.as_bytes());
        let ids = r
            .headers()?
            .iter()
            .map(|h| {
                h.trim()
                    .parse::<NodeId>()
                    .map_err(|e| Error::Parse(format!("header '{h}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut entries = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("entry '{x}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != ids.len() {
                return Err(Error::Parse(format!(
                    "row of length {} in a {}-column matrix",
                    row.len(),
                    ids.len()
                )));
            }
            entries.push(row);
        }
        if entries.len() != ids.len() {
            return Err(Error::Parse(format!(
                "{} rows for {} ids",
                entries.len(),
                ids.len()
            )));
        }
        Ok(Dense { ids, entries })
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.ids.len();
        let mut seen = self.ids.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != n {
            return Err(Error::Format("duplicate ids".into()));
        }
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Format("matrix is not square".into()));
            }
            if row[i] != 0.0 {
                return Err(Error::Format(format!(
                    "non-zero diagonal at {}",
                    self.ids[i]
                )));
            }
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Format(
                    "entries must be finite and non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Demand between switches; rows and columns share the marginal `ℋ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    inner: Dense,
    marginal: f64,
}

impl TrafficMatrix {
    /// Validates shape, diagonal and the common marginal (within 1e-9).
    pub fn new(ids: Vec<NodeId>, entries: Vec<Vec<f64>>) -> Result<Self> {
        let inner = Dense { ids, entries };
        inner.check_shape()?;
        let n = inner.ids.len();
        let marginal = inner.entries.first().map_or(0.0, |r| r.iter().sum());
        let dev = max_marginal_deviation(&inner.entries, marginal);
        if n > 0 && dev > 1e-9 {
            return Err(Error::Format(format!(
                "row and column sums must all equal {marginal} (deviation {dev:e})"
            )));
        }
        Ok(TrafficMatrix { inner, marginal })
    }

    pub fn zeros(ids: Vec<NodeId>) -> Self {
        let n = ids.len();
        TrafficMatrix {
            inner: Dense {
                ids,
                entries: vec![vec![0.0; n]; n],
            },
            marginal: 0.0,
        }
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.inner.ids
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.inner.entries
    }

    pub fn marginal(&self) -> f64 {
        self.marginal
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> f64 {
        self.inner.get(u, v)
    }

    pub fn total(&self) -> f64 {
        self.inner.entries.iter().flatten().sum()
    }

    /// Ordered pairs with positive demand, ascending.
    pub fn demands(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.inner.entries.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x > 0.0 {
                    out.push((self.inner.ids[i], self.inner.ids[j], x));
                }
            }
        }
        out.sort_by_key(|&(u, v, _)| (u, v));
        out
    }

    /// Every id is a node of `net`.
    pub fn check_network(&self, net: &Network) -> Result<()> {
        self.inner.ids.iter().try_for_each(|&u| net.check_node(u))
    }

    /// Entries multiplied by `factors[i][j]`, without re-validating
    /// marginals. Used for demand jitter.
    pub fn perturbed(&self, factors: &[Vec<f64>]) -> TrafficMatrix {
        let entries = self
            .inner
            .entries
            .iter()
            .zip(factors)
            .map(|(row, f)| row.iter().zip(f).map(|(x, s)| x * s).collect())
            .collect();
        TrafficMatrix {
            inner: Dense {
                ids: self.inner.ids.clone(),
                entries,
            },
            marginal: self.marginal,
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        self.inner.to_csv()
    }

    pub fn from_csv(src: &str) -> Result<Self> {
        let d = Dense::from_csv(src)?;
        TrafficMatrix::new(d.ids, d.entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        TrafficMatrix::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn max_marginal_deviation(m: &[Vec<f64>], target: f64) -> f64 {
    let n = m.len();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        let row: f64 = m[i].iter().sum();
        let col: f64 = (0..n).map(|k| m[k][i]).sum();
        dev = dev.max((row - target).abs()).max((col - target).abs());
    }
    dev
}

/// Zero-diagonal doubly-stochastic matrix from uniform draws, scaled so that
/// every row and column sums to `marginal`. Switch ids are `0..switches`.
pub fn gen_traffic(switches: usize, marginal: f64, seed: u64) -> Result<TrafficMatrix> {
    gen_traffic_for((0..switches).collect(), marginal, seed)
}

pub fn gen_traffic_for(ids: Vec<NodeId>, marginal: f64, seed: u64) -> Result<TrafficMatrix> {
    let n = ids.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a traffic matrix needs at least 2 switches".into(),
        ));
    }
    if !(marginal.is_finite() && marginal >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "marginal must be >= 0, got {marginal}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j {
                // (0, 1]: keeps every off-diagonal entry positive
                *x = 1.0 - rng.gen::<f64>();
            }
        }
    }
    let mut residual = f64::INFINITY;
    for _ in 0..SINKHORN_SWEEPS {
        for row in m.iter_mut() {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| m[i][j]).sum();
            (0..n).for_each(|i| m[i][j] /= s);
        }
        residual = max_marginal_deviation(&m, 1.0);
        if residual < SINKHORN_TOL {
            break;
        }
    }
    if residual >= SINKHORN_TOL {
        return Err(Error::SinkhornNonConvergence { residual });
    }
    for row in m.iter_mut() {
        row.iter_mut().for_each(|x| *x *= marginal);
    }
    TrafficMatrix::new(ids, m)
}

/// Joint (both directions) link capacities between switches.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityMatrix {
    inner: Dense,
}

impl CapacityMatrix {
    pub fn new(ids: Vec<NodeId>, entries: Vec<Vec<f64>>) -> Result<Self> {
        let inner = Dense { ids, entries };
        inner.check_shape()?;
        let n = inner.ids.len();
        for i in 0..n {
            for j in 0..i {
                if inner.entries[i][j] != inner.entries[j][i] {
                    return Err(Error::Format("capacity matrix must be symmetric".into()));
                }
            }
        }
        Ok(CapacityMatrix { inner })
    }

    /// `c` on every link between two of `ids`, zero elsewhere.
    pub fn uniform(net: &Network, ids: Vec<NodeId>, c: f64) -> Result<Self> {
        ids.iter().try_for_each(|&u| net.check_node(u))?;
        let entries = ids
            .iter()
            .map(|&u| {
                ids.iter()
                    .map(|&v| if net.is_adjacent(u, v) { c } else { 0.0 })
                    .collect()
            })
            .collect();
        CapacityMatrix::new(ids, entries)
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.inner.ids
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> f64 {
        self.inner.get(u, v)
    }

    pub fn to_csv(&self) -> Result<String> {
        self.inner.to_csv()
    }

    pub fn from_csv(src: &str) -> Result<Self> {
        let d = Dense::from_csv(src)?;
        CapacityMatrix::new(d.ids, d.entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        CapacityMatrix::from_csv(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_switches_are_forced() {
        let tm = gen_traffic(2, 7.0, 3).unwrap();
        assert_eq!(tm.entries(), &[vec![0.0, 7.0], vec![7.0, 0.0]]);
    }

    #[test]
    fn marginals_and_determinism() {
        let tm = gen_traffic(5, 10.0, 11).unwrap();
        assert!(max_marginal_deviation(tm.entries(), 10.0) < 1e-9);
        assert!((0..5).all(|i| tm.entries()[i][i] == 0.0));
        assert_eq!(tm, gen_traffic(5, 10.0, 11).unwrap());
        assert_ne!(tm, gen_traffic(5, 10.0, 12).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let tm = gen_traffic(4, 3.0, 5).unwrap();
        let text = tm.to_csv().unwrap();
        assert!(text.starts_with("0,1,2,3\n"));
        assert_eq!(TrafficMatrix::from_csv(&text).unwrap(), tm);

        let net = Network::new(3, &[(0, 1), (1, 2)]).unwrap();
        let cm = CapacityMatrix::uniform(&net, vec![0, 1, 2], 2.5).unwrap();
        assert_eq!(cm.get(0, 1), 2.5);
        assert_eq!(cm.get(0, 2), 0.0);
        assert_eq!(CapacityMatrix::from_csv(&cm.to_csv().unwrap()).unwrap(), cm);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(TrafficMatrix::new(vec![0, 1], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(TrafficMatrix::new(vec![0, 1], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(CapacityMatrix::new(vec![0, 1], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(TrafficMatrix::from_csv("0,1\n0,1\n").is_err());
    }
}
