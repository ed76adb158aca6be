use colanet_core::topology::{build_network, parse_config, BuildOptions};
use colanet_core::{
    adaptive_threshold, conserve_total_resource, resource_to_weight, ActivityTime, GatingWeight,
    Network,
};
use proptest::prelude::*;

const SHIPPED: &str = include_str!("../../../configs/colanet.xml");

proptest! {
    #[test]
    fn inactivity_lasts_its_length(k in 1i64..500) {
        let mut a = ActivityTime::finite(-k);
        for _ in 0..k {
            prop_assert!(!a.is_active());
            a = a.advance();
        }
        prop_assert!(a.is_infinite());
        prop_assert_eq!(a.advance(), ActivityTime::INFINITE);
    }

    #[test]
    fn activation_counts_down_to_zero(k in 1i64..500) {
        let mut a = ActivityTime::finite(k);
        for _ in 0..k {
            prop_assert!(a.is_active());
            a = a.advance();
        }
        prop_assert_eq!(a, ActivityTime::ZERO);
        prop_assert_eq!(a.advance(), ActivityTime::ZERO);
    }

    #[test]
    fn gating_moves_towards_its_sign(a in -1000i64..1000, w in -50i64..50, inf in any::<bool>()) {
        prop_assume!(w != 0);
        let a = if inf { ActivityTime::INFINITE } else { ActivityTime::finite(a) };
        let g = GatingWeight::new(w).unwrap();
        let b = a.gate(g);
        if w < 0 {
            prop_assert!(b <= a && b <= ActivityTime::finite(w));
            prop_assert!(!b.is_active());
        } else {
            prop_assert!(b >= a && b >= ActivityTime::finite(w));
            prop_assert!(b.is_active());
        }
    }

    #[test]
    fn weight_is_bounded_and_monotone(
        r1 in -10.0f64..100.0,
        r2 in -10.0f64..100.0,
        lo in -1.0f64..0.0,
        span in 0.01f64..5.0,
    ) {
        let hi = lo + span;
        let (w1, w2) = (resource_to_weight(r1, lo, hi), resource_to_weight(r2, lo, hi));
        prop_assert!(w1 >= lo && w1 < hi);
        if r1 <= r2 {
            prop_assert!(w1 <= w2);
        }
    }

    #[test]
    fn threshold_never_below_one(ws in prop::collection::vec(-1.0f64..1.0, 0..200), alpha in 0.0f64..1.0) {
        prop_assert!(adaptive_threshold(ws, alpha) >= 1.0);
    }

    #[test]
    fn conservation_keeps_the_sum(
        entries in prop::collection::vec(-1.0f64..1.0, 2..200),
        raw in prop::collection::vec((0usize..1000, -0.1f64..0.1), 1..20),
    ) {
        let n = entries.len();
        let mut deltas: Vec<(usize, f64)> = raw.into_iter().map(|(i, d)| (i % (n - 1), d)).collect();
        deltas.sort_by_key(|d| d.0);
        deltas.dedup_by_key(|d| d.0);
        let mut v = entries.clone();
        prop_assert!(conserve_total_resource(&mut v, &deltas));
        let before: f64 = entries.iter().sum();
        let after: f64 = v.iter().sum();
        prop_assert!((before - after).abs() < 1e-12);
    }
}

fn shipped() -> Network {
    let mut options = BuildOptions::seeded(4);
    options.plasticity.w_min = Some(-0.00746);
    options.plasticity.w_max = Some(0.328);
    build_network(&parse_config(SHIPPED).unwrap().config, &options).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_streams_conserve_resource_and_bound_weights(
        stream in prop::collection::vec(prop::collection::btree_set(0usize..134, 0..12), 200..600),
    ) {
        let mut net = shipped();
        let totals: Vec<f64> = net.learners().map(|(_, l)| l.resources.total()).collect();
        for inputs in &stream {
            let inputs: Vec<usize> = inputs.iter().copied().collect();
            net.tick(&inputs).unwrap();
        }
        for ((_, l), total) in net.learners().zip(totals) {
            prop_assert!((l.resources.sum() - total).abs() < 1e-9);
        }
        for row in net.weight_dump() {
            prop_assert!(row.weight >= -0.00746 && row.weight < 0.328);
        }
        for s in net.neurons() {
            prop_assert!(s.h >= 1.0);
        }
    }
}
