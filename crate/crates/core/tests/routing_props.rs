mod common;

use proptest::prelude::*;
use tdnet::routing::{
    count_min_hop_routes, min_hops, route_greedy_with, route_set_with, DEFAULT_ENUMERATION_CAP,
};

use common::*;

fn case(seed: u64, n: usize) -> (tdnet::Network, Vec<f64>, usize, usize) {
    use rand::Rng;
    let mut r = rng(seed);
    let net = connected_network(&mut r, n, 0.25);
    let td = (0..n).map(|_| r.gen_range(-4.0..4.0)).collect();
    let u = r.gen_range(0..n);
    let v = (u + r.gen_range(1..n)) % n;
    (net, td, u, v)
}

proptest! {
    #[test]
    fn greedy_route_is_a_min_hop_route(seed in any::<u64>(), n in 2usize..11) {
        let (net, td, u, v) = case(seed, n);
        let g = route_greedy_with(&net, &td, u, v).unwrap();
        prop_assert_eq!(g.source(), u);
        prop_assert_eq!(g.target(), v);
        prop_assert_eq!(g.len(), min_hops(&net, u, v).unwrap());
        prop_assert!(min_hop_paths(&net, u, v).iter().any(|p| p == g.nodes()));
    }

    #[test]
    fn route_sets_grow_with_delta(seed in any::<u64>(), n in 2usize..11, d in 0.0f64..1.0) {
        let (net, td, u, v) = case(seed, n);
        let tight = route_set_with(&net, &td, u, v, d, DEFAULT_ENUMERATION_CAP).unwrap();
        let loose = route_set_with(&net, &td, u, v, d + 0.5, DEFAULT_ENUMERATION_CAP).unwrap();
        let all = route_set_with(&net, &td, u, v, f64::INFINITY, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert!(!tight.is_empty());
        prop_assert!(tight.routes.iter().all(|r| loose.routes.contains(r)));
        prop_assert_eq!(all.len() as u64, count_min_hop_routes(&net, u, v).unwrap());
        prop_assert_eq!(all.len(), min_hop_paths(&net, u, v).len());
    }
}
