//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdnet::{FlowField, FlowFn, Network, NodeId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus each remaining pair with probability `p`.
pub fn connected_network(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Network {
    let mut links = Vec::new();
    for v in 1..n {
        links.push((rng.gen_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !links.contains(&(u, v)) && rng.gen_bool(p) {
                links.push((u, v));
            }
        }
    }
    Network::new(n, &links).unwrap()
}

/// Nonnegative flows `a + b·sin(c·t)` on a random subset of arcs.
pub fn closed_field(rng: &mut ChaCha8Rng, net: &Network) -> FlowField {
    let mut field = FlowField::new();
    for (u, v) in net.links() {
        for (x, y) in [(u, v), (v, u)] {
            if rng.gen_bool(0.7) {
                let a: f64 = rng.gen_range(1.0..5.0);
                let b: f64 = rng.gen_range(0.0..a);
                let c: f64 = rng.gen_range(0.1..3.0);
                let f = FlowFn::parse(&format!("{a} + {b}*sin({c}*t)")).unwrap();
                field.insert(net, x, y, f).unwrap();
            }
        }
    }
    field
}

/// Every simple path from `u` to `v`, by exhaustive depth-first search.
pub fn simple_paths(net: &Network, u: NodeId, v: NodeId) -> Vec<Vec<NodeId>> {
    fn go(net: &Network, v: NodeId, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        let last = *path.last().unwrap();
        if last == v {
            out.push(path.clone());
            return;
        }
        for &z in net.neighbors(last).unwrap() {
            if !path.contains(&z) {
                path.push(z);
                go(net, v, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(net, v, &mut vec![u], &mut out);
    out
}

/// Shortest simple paths by exhaustive enumeration.
pub fn min_hop_paths(net: &Network, u: NodeId, v: NodeId) -> Vec<Vec<NodeId>> {
    let all = simple_paths(net, u, v);
    let best = all.iter().map(Vec::len).min().unwrap();
    let mut min: Vec<_> = all.into_iter().filter(|p| p.len() == best).collect();
    min.sort();
    min
}

/// A random simple path of at least two links, grown by a self-avoiding walk.
pub fn random_route(rng: &mut ChaCha8Rng, net: &Network) -> Option<Vec<NodeId>> {
    for _ in 0..20 {
        let mut path = vec![rng.gen_range(0..net.node_count())];
        let len = rng.gen_range(2..=net.node_count().min(6));
        while path.len() <= len {
            let last = *path.last().unwrap();
            let next: Vec<_> = net
                .neighbors(last)
                .unwrap()
                .iter()
                .filter(|z| !path.contains(z))
                .copied()
                .collect();
            if next.is_empty() {
                break;
            }
            path.push(next[rng.gen_range(0..next.len())]);
        }
        if path.len() >= 3 {
            return Some(path);
        }
    }
    None
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// Richardson-extrapolated central difference of order 1 to 3.
pub fn numeric_derivative(f: impl Fn(f64) -> f64, x: f64, order: usize, h: f64) -> f64 {
    let d = |h: f64| match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => {
            (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
        }
        _ => panic!("order {order} unsupported"),
    };
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Solves `f(x) = y` for increasing `f` by bisection on `[lo, hi]`.
pub fn invert_increasing(f: impl Fn(f64) -> f64, y: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
