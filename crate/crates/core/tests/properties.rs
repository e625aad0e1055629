use fairspread::graph::Network;
use fairspread::model::{normalize_theta, CommunityLabels};
use fairspread::objective::{entropy, normalize_coverage, DEFAULT_EPSILON};
use fairspread::optimizer::{
    baseline_allocation, project_feasible, round_allocation, Strategy as Allocation,
};
use proptest::prelude::*;

fn labels_and_theta() -> impl Strategy<Value = (Vec<usize>, usize, Vec<f64>)> {
    (1usize..5).prop_flat_map(|k| {
        (k..40).prop_flat_map(move |n| {
            (
                prop::collection::vec(0..k, n),
                Just(k),
                prop::collection::vec(0.05f64..10.0, n),
            )
        })
    })
}

proptest! {
    #[test]
    fn adjacency_is_symmetric_and_loop_free(
        n in 1usize..30,
        pairs in prop::collection::vec((0usize..30, 0usize..30), 0..120),
    ) {
        let edges: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let net = Network::from_edges(n, edges.iter().copied());
        for i in 0..n {
            prop_assert!(!net.has_edge(i, i));
            for &j in net.neighbors(i) {
                prop_assert!(net.has_edge(j, i));
            }
        }
        let degree_sum: usize = net.degrees().iter().sum();
        prop_assert_eq!(degree_sum, 2 * net.edge_count());
        for (a, b) in edges {
            prop_assert_eq!(net.has_edge(a, b), a != b);
        }
    }

    #[test]
    fn theta_normalization_is_idempotent((raw_labels, k, raw) in labels_and_theta()) {
        // make every community nonempty
        let mut l = raw_labels;
        for (c, slot) in l.iter_mut().take(k).enumerate() {
            *slot = c;
        }
        let labels = CommunityLabels::new(l, k).unwrap();
        let n = labels.n() as f64;
        let pi: Vec<f64> = labels.sizes().iter().map(|&s| s as f64 / n).collect();
        let once = normalize_theta(&raw, &labels, &pi).unwrap();
        let twice = normalize_theta(&once, &labels, &pi).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let mut sums = vec![0.0; k];
        for (i, t) in once.iter().enumerate() {
            sums[labels.of(i)] += t;
        }
        for (c, s) in sums.iter().enumerate() {
            prop_assert!((s / labels.sizes()[c] as f64 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_lies_in_unit_interval(q in prop::collection::vec(0.0f64..5.0, 1..8)) {
        let (p, degenerate) = normalize_coverage(&q, DEFAULT_EPSILON);
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        let h = entropy(&p).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&h));
        if degenerate {
            prop_assert!((h - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rounding_spends_the_budget_within_class_sizes(
        weights in prop::collection::vec(1usize..50, 1..8),
        fractions in prop::collection::vec(0.0f64..1.0, 8),
        share in 0.0f64..1.0,
    ) {
        let total: usize = weights.iter().sum();
        let budget = (share * total as f64).floor() as usize;
        let w: Vec<f64> = weights.iter().map(|&x| x as f64).collect();
        let x = project_feasible(&fractions[..weights.len()], &w, budget as f64);
        let y = round_allocation(&x, &weights, budget).unwrap();
        prop_assert_eq!(y.iter().sum::<usize>(), budget);
        for ((&yi, &wi), xi) in y.iter().zip(&weights).zip(&x) {
            prop_assert!(yi <= wi);
            prop_assert!(yi as f64 >= (xi * wi as f64).floor() - 1e-9);
        }
    }

    #[test]
    fn baselines_spend_the_budget(
        sizes in prop::collection::vec(1usize..40, 1..6),
        share in 0.0f64..1.0,
    ) {
        let total: usize = sizes.iter().sum();
        let budget = (share * total as f64).floor() as usize;
        for s in [Allocation::Equal, Allocation::Proportional, Allocation::Largest] {
            let y = baseline_allocation(s, &sizes, budget).unwrap();
            prop_assert_eq!(y.iter().sum::<usize>(), budget);
            prop_assert!(y.iter().zip(&sizes).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn projection_is_feasible(
        z in prop::collection::vec(-2.0f64..3.0, 1..8),
        scale in 0.0f64..1.0,
    ) {
        let w: Vec<f64> = (1..=z.len()).map(|i| i as f64).collect();
        let budget = scale * w.iter().sum::<f64>();
        let x = project_feasible(&z, &w, budget);
        prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() <= budget + 1e-9);
    }
}
