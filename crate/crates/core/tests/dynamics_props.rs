mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use tdnet::dynamics::temporal::bound_from_parts;
use tdnet::dynamics::{
    check_max_distribution, check_spatial_dynamics, inverse_derivatives, CheckMode, Coupling,
    CouplingModel,
};
use tdnet::{Expr, Network};

use common::*;

proptest! {
    #[test]
    fn cauchy_schwarz_always_holds(ab in vec((-5.0f64..5.0, -5.0f64..5.0), 1..10)) {
        let (a, b): (Vec<f64>, Vec<f64>) = ab.into_iter().unzip();
        let bound = bound_from_parts(0, &a, &b);
        prop_assert!(bound.lhs <= bound.cs_bound + 1e-12);
    }

    #[test]
    fn homogeneous_neighbors_meet_the_bound(x in -5.0f64..5.0, y in -5.0f64..5.0, n in 1usize..10) {
        let bound = bound_from_parts(0, &vec![x; n], &vec![y; n]);
        prop_assert!(bound.homogeneous);
        prop_assert!((bound.lhs - bound.homogeneous_bound).abs() <= 1e-9);
    }

    #[test]
    fn inverse_of_inverse_is_identity(h in vec(-3.0f64..3.0, 1..5), h1 in 0.2f64..4.0) {
        let mut forward = h;
        forward[0] = h1;
        let g = inverse_derivatives(&forward).unwrap();
        let back = inverse_derivatives(&g).unwrap();
        for (a, b) in back.iter().zip(&forward) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn identity_holds_for_polynomial_couplings(
        a in 1.0f64..4.0, b in 0.0f64..1.0, x0 in -2.0f64..2.0, t in 0.0f64..3.0, order in 1usize..=3,
    ) {
        let net = Network::new(2, &[(0, 1)]).unwrap();
        let mut m = CouplingModel::new();
        let h = Expr::parse(&format!("{a}*x + {b}*x^3 + sin(t)")).unwrap();
        m.insert(&net, 0, 1, Coupling::expr(h)).unwrap();
        m.set_state(1, x0);
        prop_assert!(check_spatial_dynamics(&m, 0, 1, order, t).unwrap().abs() <= 1e-6);
    }

    #[test]
    fn equal_rates_are_maximal_globally_and_locally(seed in any::<u64>(), n in 2usize..10) {
        let mut r = rng(seed);
        let net = connected_network(&mut r, n, 0.3);
        let mut m = CouplingModel::new();
        for u in net.nodes() {
            let deg = net.degree(u) as f64;
            for &z in net.neighbors(u).unwrap() {
                m.insert(&net, u, z, Coupling::affine(1.0 / deg, 0.0, Expr::Const(2.0))).unwrap();
            }
        }
        let g = check_max_distribution(&m, &net, 0.0, 1e-9, CheckMode::Global).unwrap();
        let l = check_max_distribution(&m, &net, 0.0, 1e-9, CheckMode::Local).unwrap();
        prop_assert!(g.satisfied && l.satisfied);
        prop_assert_eq!(g.pairs_checked, n * (n - 1));
    }
}
