mod common;

use proptest::prelude::*;
use tdnet::divergence::{all_node_td, link_td, route_td, DivergenceReport};
use tdnet::{EvalMode, Route};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn link_divergence_factorizes(seed in any::<u64>(), n in 2usize..25, t in 0.0f64..10.0) {
        let mut r = rng(seed);
        let net = connected_network(&mut r, n, 0.15);
        let field = closed_field(&mut r, &net);
        let td = all_node_td(&net, &field, t).unwrap();
        for (u, v) in net.links() {
            let d = link_td(&net, &field, u, v, t).unwrap();
            prop_assert!((d - td[u] - td[v]).abs() <= 1e-9);
        }
        prop_assert!(td.iter().sum::<f64>().abs() <= 1e-9);
    }

    #[test]
    fn route_divergence_is_the_node_sum(seed in any::<u64>(), n in 3usize..25, t in 0.0f64..10.0) {
        let mut r = rng(seed);
        let net = connected_network(&mut r, n, 0.15);
        let field = closed_field(&mut r, &net);
        let td = all_node_td(&net, &field, t).unwrap();
        if let Some(p) = random_route(&mut r, &net) {
            let route = Route::new(&net, p.clone()).unwrap();
            let d = route_td(&net, &field, &route, t).unwrap();
            prop_assert!((d - p.iter().map(|&w| td[w]).sum::<f64>()).abs() <= 1e-9);
        }
    }

    #[test]
    fn windowed_report_still_conserves(seed in any::<u64>(), n in 2usize..15, t in 0.0f64..5.0, w in 0.01f64..2.0) {
        let mut r = rng(seed);
        let net = connected_network(&mut r, n, 0.2);
        let field = closed_field(&mut r, &net);
        let rep = DivergenceReport::compute(&net, &field, t, EvalMode::Windowed { delta: w }, &[]).unwrap();
        prop_assert_eq!(rep.node_td.len(), n);
        prop_assert_eq!(rep.link_td.len(), net.link_count());
        prop_assert!(rep.total().abs() <= 1e-9);
    }
}
