use proptest::prelude::*;
use tdnet::topology::gen_ring;
use tdnet::traffic::{gen_traffic, CapacityMatrix, TrafficMatrix};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sinkhorn_marginals(n in 2usize..40, h in 0.1f64..50.0, seed in any::<u64>()) {
        let tm = gen_traffic(n, h, seed).unwrap();
        let e = tm.entries();
        for i in 0..n {
            prop_assert_eq!(e[i][i], 0.0);
            prop_assert!((e[i].iter().sum::<f64>() - h).abs() <= 1e-9 * h.max(1.0));
            prop_assert!(((0..n).map(|j| e[j][i]).sum::<f64>() - h).abs() <= 1e-9 * h.max(1.0));
        }
        prop_assert_eq!(&gen_traffic(n, h, seed).unwrap(), &tm);
    }

    #[test]
    fn csv_round_trip(n in 2usize..20, seed in any::<u64>()) {
        let tm = gen_traffic(n, 3.0, seed).unwrap();
        prop_assert_eq!(TrafficMatrix::from_csv(&tm.to_csv().unwrap()).unwrap(), tm);
    }
}

#[test]
fn capacity_csv_round_trip() {
    let net = gen_ring(4, &[2, 1]).unwrap();
    let cm = CapacityMatrix::uniform(&net, net.nodes().collect(), 2.5).unwrap();
    assert_eq!(CapacityMatrix::from_csv(&cm.to_csv().unwrap()).unwrap(), cm);
}
