use std::collections::HashMap;

use fairspread::model::{
    fixed_labels, generate_network, normalize_theta, CommunityLabels, DcsbmParams,
};
use fairspread::spread::{
    build_psi, cascade, coverage, exact_activation_probs, exact_activation_steps, simulate_ic,
    simulate_ic_resampled, spread_coverage, TransmissionSpec,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(n: usize, seed: u64) -> (DcsbmParams, CommunityLabels) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = vec![0.6, 0.4];
    let labels = fixed_labels(&pi, n).unwrap();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let theta = normalize_theta(&raw, &labels, &pi).unwrap();
    let p = DMatrix::from_row_slice(2, 2, &[0.15, 0.03, 0.03, 0.2]);
    (DcsbmParams::new(pi, p, theta), labels)
}

#[test]
fn adding_seeds_never_shrinks_the_active_set() {
    // one coin per directed edge, shared by both runs
    let (params, labels) = instance(120, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let net = generate_network(&params, &labels, &mut rng).unwrap();
        let coins: HashMap<(usize, usize), bool> = net
            .edges()
            .flat_map(|(a, b)| [(a, b), (b, a)])
            .map(|e| (e, rng.random_bool(0.3)))
            .collect();
        let small: Vec<bool> = (0..120).map(|_| rng.random_bool(0.05)).collect();
        let large: Vec<bool> = small.iter().map(|&s| s || rng.random_bool(0.05)).collect();
        let t = rng.random_range(1..5);
        let a = cascade(&net, &small, t, |u, v| coins[&(u, v)]);
        let b = cascade(&net, &large, t, |u, v| coins[&(u, v)]);
        for i in 0..120 {
            if let Some(ta) = a.activated_at[i] {
                let tb = b.activated_at[i].expect("monotone in seeds");
                assert!(tb <= ta);
            }
        }
    }
}

#[test]
fn longer_horizons_only_add_activations() {
    let (params, labels) = instance(80, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let seeds: Vec<bool> = (0..80).map(|i| i % 10 == 0).collect();
    let exact = exact_activation_steps(&params, &labels, &TransmissionSpec::Scalar(0.4), &seeds, 4)
        .unwrap();
    for w in exact.cumulative.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            assert!(b >= a);
        }
    }
    let net = generate_network(&params, &labels, &mut rng).unwrap();
    let trace = simulate_ic(&net, &TransmissionSpec::Scalar(0.4), &seeds, 4, &mut rng).unwrap();
    let counts: Vec<usize> = (0..=4).map(|t| trace.active_by(t).count()).collect();
    assert!(counts.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn one_step_probabilities_are_bounded_by_the_linearization() {
    let (params, labels) = instance(50, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for beta in [0.1, 0.5, 1.0] {
        let tspec = TransmissionSpec::Scalar(beta);
        let op = build_psi(&params, &labels, &tspec).unwrap();
        let seeds: Vec<bool> = (0..50).map(|_| rng.random_bool(0.4)).collect();
        let s: Vec<f64> = seeds.iter().map(|&b| f64::from(u8::from(b))).collect();
        let psi_s = op.apply(&s);
        let exact = exact_activation_probs(&params, &labels, &tspec, &seeds, 1).unwrap();
        for i in (0..50).filter(|&i| !seeds[i]) {
            // 1 − Π(1 − a_j) lies between Σa_j − ½(Σa_j)² and Σa_j
            assert!(exact[i] <= psi_s[i] + 1e-12);
            assert!(psi_s[i] - exact[i] <= 0.5 * psi_s[i] * psi_s[i] + 1e-12);
        }
    }
}

#[test]
fn resampled_monte_carlo_converges_to_one_step_recursion() {
    // one step has no back-flow, so the recursion is exact there
    let (params, labels) = instance(50, 7);
    let tspec = TransmissionSpec::within_between(2, 0.6, 0.2);
    let seeds: Vec<bool> = (0..50).map(|i| i % 7 == 0).collect();
    let exact = exact_activation_probs(&params, &labels, &tspec, &seeds, 1).unwrap();
    let runs = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut hits = vec![0usize; 50];
    for _ in 0..runs {
        let trace = simulate_ic_resampled(&params, &labels, &tspec, &seeds, 1, &mut rng).unwrap();
        for i in trace.active_by(1) {
            hits[i] += 1;
        }
    }
    let mut total_exact = 0.0;
    let mut total_mc = 0.0;
    for i in 0..50 {
        let p = exact[i];
        let mc = hits[i] as f64 / runs as f64;
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        assert!(
            (mc - p).abs() <= 4.5 * se + 1e-12,
            "node {i}: exact {p}, mc {mc}"
        );
        total_exact += p;
        total_mc += mc;
    }
    assert!((total_exact - total_mc).abs() / total_exact < 0.05);
}

#[test]
fn spread_coverage_excludes_seeds() {
    let (params, labels) = instance(40, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let net = generate_network(&params, &labels, &mut rng).unwrap();
    let seeds: Vec<bool> = (0..40).map(|i| i < 3 || i == 30).collect();
    let trace = simulate_ic(&net, &TransmissionSpec::Scalar(0.0), &seeds, 3, &mut rng).unwrap();
    let with = coverage(&trace, &labels, 3).unwrap();
    let without = spread_coverage(&trace, &labels, 3).unwrap();
    assert!((with.m - 4.0 / 40.0).abs() < 1e-15);
    assert_eq!(without.m, 0.0);
    let sizes = labels.sizes();
    assert!((with.q[0] - 3.0 / sizes[0] as f64).abs() < 1e-15);
}
