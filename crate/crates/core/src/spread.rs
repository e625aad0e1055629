//! Independent-cascade spread: Monte-Carlo simulation, the exact recursive
//! activation probabilities under a DCSBM, and the linearized one-step
//! operator `Ψ` whose powers approximate spread.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::model::{generate_network, CommunityLabels, DcsbmParams};
use crate::objective::{entropy_unchecked, normalize_coverage, DEFAULT_EPSILON};

/// Largest n for which [`SpreadOperator::Dense`] is built.
pub const DENSE_LIMIT: usize = 5000;

/// Per-pair transmission probabilities `β_ij`.
#[derive(Debug, Clone, PartialEq)]
pub enum TransmissionSpec {
    Scalar(f64),
    /// `β` for each pair of communities (K×K, symmetric).
    Block(DMatrix<f64>),
}

impl TransmissionSpec {
    /// Block spec with `within` on the diagonal and `between` elsewhere.
    pub fn within_between(k: usize, within: f64, between: f64) -> Self {
        TransmissionSpec::Block(DMatrix::from_fn(k, k, |a, b| {
            if a == b {
                within
            } else {
                between
            }
        }))
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            TransmissionSpec::Scalar(b) if (0.0..=1.0).contains(b) => Ok(()),
            TransmissionSpec::Scalar(b) => {
                Err(Error::Transmission(format!("beta {b} outside [0, 1]")))
            }
            TransmissionSpec::Block(m) => {
                if m.nrows() != k || m.ncols() != k {
                    return Err(Error::Transmission(format!(
                        "block beta is {}x{}, expected {k}x{k}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if m.iter().any(|b| !(0.0..=1.0).contains(b)) {
                    return Err(Error::Transmission(
                        "block beta entry outside [0, 1]".into(),
                    ));
                }
                if (m - m.transpose()).abs().max() > 1e-12 {
                    return Err(Error::Transmission("block beta is not symmetric".into()));
                }
                Ok(())
            }
        }
    }

    /// `β` between communities `a` and `b`.
    pub fn between(&self, a: usize, b: usize) -> f64 {
        match self {
            TransmissionSpec::Scalar(b0) => *b0,
            TransmissionSpec::Block(m) => m[(a, b)],
        }
    }

    fn needs_labels(&self) -> bool {
        matches!(self, TransmissionSpec::Block(_))
    }
}

/// Activation times from one cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    /// Step at which each node became active; seeds are at 0.
    pub activated_at: Vec<Option<usize>>,
    /// Nodes newly activated at each step; `frontiers[0]` are the seeds.
    pub frontiers: Vec<Vec<usize>>,
    /// Number of steps the process was run for.
    pub horizon: usize,
}

impl ActivationTrace {
    pub fn active_by(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.activated_at
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.is_some_and(|a| a <= t))
            .map(|(i, _)| i)
    }
}

/// Runs an independent cascade for `t` steps. `transmit(u, v)` decides
/// whether the newly active `u` passes to its inactive neighbour `v`; each
/// directed attempt is made at most once.
pub fn cascade<F>(network: &Network, seeds: &[bool], t: usize, mut transmit: F) -> ActivationTrace
where
    F: FnMut(usize, usize) -> bool,
{
    let n = network.n();
    let mut activated_at = vec![None; n];
    let frontier: Vec<usize> = (0..n).filter(|&i| seeds[i]).collect();
    for &i in &frontier {
        activated_at[i] = Some(0);
    }
    let mut frontiers = vec![frontier];
    for step in 1..=t {
        let current = &frontiers[step - 1];
        if current.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &u in current {
            for &v in network.neighbors(u) {
                if activated_at[v].is_none() && transmit(u, v) {
                    activated_at[v] = Some(step);
                    next.push(v);
                }
            }
        }
        frontiers.push(next);
    }
    ActivationTrace {
        activated_at,
        frontiers,
        horizon: t,
    }
}

/// Monte-Carlo independent cascade on a fixed network.
pub fn simulate_ic<R: Rng + ?Sized>(
    network: &Network,
    tspec: &TransmissionSpec,
    seeds: &[bool],
    t: usize,
    rng: &mut R,
) -> Result<ActivationTrace> {
    if seeds.len() != network.n() {
        return Err(Error::Dimension {
            what: "seeds",
            got: seeds.len(),
            expected: network.n(),
        });
    }
    let labels = match (tspec.needs_labels(), network.labels()) {
        (true, None) => {
            return Err(Error::Transmission(
                "block beta needs community labels".into(),
            ))
        }
        (_, l) => l,
    };
    tspec.validate(labels.map_or(1, CommunityLabels::k))?;
    let trace = cascade(network, seeds, t, |u, v| {
        let beta = match labels {
            Some(l) => tspec.between(l.of(u), l.of(v)),
            None => tspec.between(0, 0),
        };
        rng.random::<f64>() < beta
    });
    Ok(trace)
}

/// One cascade on a freshly generated network: edges are redrawn from the
/// model, then spread runs on the draw. Averaging over runs targets the
/// model-level expectation that [`exact_activation_probs`] computes.
pub fn simulate_ic_resampled<R: Rng + ?Sized>(
    params: &DcsbmParams,
    labels: &CommunityLabels,
    tspec: &TransmissionSpec,
    seeds: &[bool],
    t: usize,
    rng: &mut R,
) -> Result<ActivationTrace> {
    let net = generate_network(params, labels, rng)?;
    simulate_ic(&net, tspec, seeds, t, rng)
}

/// Per-community activated proportions after a cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSummary {
    /// Activated fraction of each community.
    pub q: Vec<f64>,
    /// `q` rescaled to sum to one (uniform when nothing is active).
    pub p: Vec<f64>,
    /// Activated fraction of the whole network.
    pub m: f64,
    /// Normalized entropy of `p`.
    pub entropy: f64,
}

pub fn coverage(
    trace: &ActivationTrace,
    labels: &CommunityLabels,
    t: usize,
) -> Result<CoverageSummary> {
    summarize_activations(trace, labels, t, 0)
}

/// Like [`coverage`] but counting only nodes the cascade reached, not the
/// seeds themselves. This is the quantity `Ψᵗ s` approximates.
pub fn spread_coverage(
    trace: &ActivationTrace,
    labels: &CommunityLabels,
    t: usize,
) -> Result<CoverageSummary> {
    summarize_activations(trace, labels, t, 1)
}

fn summarize_activations(
    trace: &ActivationTrace,
    labels: &CommunityLabels,
    t: usize,
    from: usize,
) -> Result<CoverageSummary> {
    if t > trace.horizon {
        return Err(Error::BeyondHorizon {
            requested: t,
            horizon: trace.horizon,
        });
    }
    if labels.n() != trace.activated_at.len() {
        return Err(Error::Dimension {
            what: "labels",
            got: labels.n(),
            expected: trace.activated_at.len(),
        });
    }
    let sizes = labels.sizes();
    let mut active = vec![0usize; labels.k()];
    for (i, at) in trace.activated_at.iter().enumerate() {
        if at.is_some_and(|a| a >= from && a <= t) {
            active[labels.of(i)] += 1;
        }
    }
    let q: Vec<f64> = active
        .iter()
        .zip(&sizes)
        .map(|(&a, &s)| if s == 0 { 0.0 } else { a as f64 / s as f64 })
        .collect();
    let m = active.iter().sum::<usize>() as f64 / labels.n() as f64;
    let (p, _) = normalize_coverage(&q, DEFAULT_EPSILON);
    let entropy = entropy_unchecked(&p);
    Ok(CoverageSummary { q, p, m, entropy })
}

/// Exact recursive activation probabilities, kept per step.
#[derive(Debug, Clone)]
pub struct ExactSpread {
    /// `cumulative[r][i]`: probability that `i` is active by step `r`.
    pub cumulative: Vec<Vec<f64>>,
    /// `per_step[r][i]`: probability that `i` is activated exactly at step `r`.
    pub per_step: Vec<Vec<f64>>,
}

/// Runs the recursion
/// `P(active by τ) = 1 − Π_{r<τ} Π_{j≠i} (1 − Ψ_ij g_j(r))`
/// with `g_j(0) = s_j` and `g_j(r) = cum_j(r) − cum_j(r−1)`. Seeds stay at one.
pub fn exact_activation_steps(
    params: &DcsbmParams,
    labels: &CommunityLabels,
    tspec: &TransmissionSpec,
    seeds: &[bool],
    t: usize,
) -> Result<ExactSpread> {
    let op = build_psi_with(params, labels, tspec, PsiOptions::default())?;
    let n = params.n();
    if seeds.len() != n {
        return Err(Error::Dimension {
            what: "seeds",
            got: seeds.len(),
            expected: n,
        });
    }
    let s: Vec<f64> = seeds.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut cumulative = vec![s.clone()];
    let mut per_step = vec![s.clone()];
    // Π over past steps of the no-transmission probability
    let mut survive = vec![1.0; n];
    for _ in 1..=t {
        let g = per_step.last().expect("nonempty");
        let prev = cumulative.last().expect("nonempty");
        let mut cum = vec![0.0; n];
        for i in 0..n {
            if seeds[i] {
                cum[i] = 1.0;
                continue;
            }
            let mut factor = 1.0;
            for (j, &gj) in g.iter().enumerate() {
                if j != i && gj != 0.0 {
                    factor *= 1.0 - op.entry(i, j) * gj;
                }
            }
            survive[i] *= factor;
            cum[i] = 1.0 - survive[i];
        }
        let step: Vec<f64> = cum.iter().zip(prev).map(|(c, p)| c - p).collect();
        cumulative.push(cum);
        per_step.push(step);
    }
    Ok(ExactSpread {
        cumulative,
        per_step,
    })
}

/// Probability that each node is active by step `t`.
pub fn exact_activation_probs(
    params: &DcsbmParams,
    labels: &CommunityLabels,
    tspec: &TransmissionSpec,
    seeds: &[bool],
    t: usize,
) -> Result<Vec<f64>> {
    let mut spread = exact_activation_steps(params, labels, tspec, seeds, t)?;
    Ok(spread.cumulative.pop().expect("nonempty"))
}

/// Class-compressed form of `Ψ`: nodes in one class share community and
/// `θ`, so `Ψ_ij = Φ_{class(i), class(j)}` off the diagonal and
/// `(Ψ s)_i = (Φ S)_{class(i)} − Φ_{aa} s_i` with `S` the class sums of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedOperator {
    phi: DMatrix<f64>,
    class_of: Vec<usize>,
}

impl CompressedOperator {
    pub fn classes(&self) -> usize {
        self.phi.nrows()
    }

    fn class_sums(&self, s: &[f64]) -> DVector<f64> {
        let mut sums = DVector::zeros(self.classes());
        for (i, &c) in self.class_of.iter().enumerate() {
            sums[c] += s[i];
        }
        sums
    }

    fn apply_with(&self, phi: &DMatrix<f64>, s: &[f64]) -> Vec<f64> {
        let mixed = phi * self.class_sums(s);
        self.class_of
            .iter()
            .enumerate()
            .map(|(i, &c)| mixed[c] - phi[(c, c)] * s[i])
            .collect()
    }
}

/// The linear map `Ψ_ij = I(i≠j) β_ij θ_i θ_j P_{c_i c_j}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpreadOperator {
    Dense(DMatrix<f64>),
    Compressed(CompressedOperator),
}

/// Which representation [`build_psi_with`] produces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PsiForm {
    /// Compressed when it is smaller than the dense matrix or `n` exceeds
    /// [`DENSE_LIMIT`], dense otherwise.
    #[default]
    Auto,
    Dense,
    Compressed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PsiOptions {
    pub form: PsiForm,
    /// Clamp entries above one instead of failing. Only meant for plug-in
    /// estimates on observed networks, where hub degree parameters can push
    /// `θ_i θ_j P` past one.
    pub clamp: bool,
}

impl SpreadOperator {
    pub fn n(&self) -> usize {
        match self {
            SpreadOperator::Dense(m) => m.nrows(),
            SpreadOperator::Compressed(c) => c.class_of.len(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            SpreadOperator::Dense(m) => m[(i, j)],
            SpreadOperator::Compressed(_) if i == j => 0.0,
            SpreadOperator::Compressed(c) => c.phi[(c.class_of[i], c.class_of[j])],
        }
    }

    /// `Ψ s`.
    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        match self {
            SpreadOperator::Dense(m) => (m * DVector::from_column_slice(s)).as_slice().to_vec(),
            SpreadOperator::Compressed(c) => c.apply_with(&c.phi, s),
        }
    }

    /// `Ψᵀ r`.
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        match self {
            SpreadOperator::Dense(m) => {
                m.tr_mul(&DVector::from_column_slice(r)).as_slice().to_vec()
            }
            SpreadOperator::Compressed(c) => c.apply_with(&c.phi.transpose(), r),
        }
    }

    /// `Ψᵗ s` by `t` successive products.
    pub fn power_apply(&self, s: &[f64], t: usize) -> Vec<f64> {
        let mut v = s.to_vec();
        for _ in 0..t {
            v = self.apply(&v);
        }
        v
    }

    /// `(Ψᵀ)ᵗ r`.
    pub fn power_apply_transpose(&self, r: &[f64], t: usize) -> Vec<f64> {
        let mut v = r.to_vec();
        for _ in 0..t {
            v = self.apply_transpose(&v);
        }
        v
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SpreadOperator::Dense(m) => m.clone(),
            SpreadOperator::Compressed(_) => {
                let n = self.n();
                DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
            }
        }
    }
}

/// Builds `Ψ`, failing if any entry leaves `[0, 1]`.
pub fn build_psi(
    params: &DcsbmParams,
    labels: &CommunityLabels,
    tspec: &TransmissionSpec,
) -> Result<SpreadOperator> {
    build_psi_with(params, labels, tspec, PsiOptions::default())
}

pub fn build_psi_with(
    params: &DcsbmParams,
    labels: &CommunityLabels,
    tspec: &TransmissionSpec,
    options: PsiOptions,
) -> Result<SpreadOperator> {
    let n = params.n();
    if labels.n() != n {
        return Err(Error::Dimension {
            what: "labels",
            got: labels.n(),
            expected: n,
        });
    }
    if labels.k() != params.k() {
        return Err(Error::Dimension {
            what: "labels.k",
            got: labels.k(),
            expected: params.k(),
        });
    }
    tspec.validate(params.k())?;

    // exact classes: identical community and theta
    let mut keys: BTreeMap<(usize, u64), usize> = BTreeMap::new();
    for i in 0..n {
        let next = keys.len();
        keys.entry((labels.of(i), params.theta[i].to_bits()))
            .or_insert(next);
    }
    let v = keys.len();
    let compressed = match options.form {
        PsiForm::Dense => false,
        PsiForm::Compressed => true,
        PsiForm::Auto => n > DENSE_LIMIT || v * v < n,
    };

    let check = |i: usize, j: usize, value: f64| -> Result<f64> {
        if !(0.0..=1.0).contains(&value) {
            if options.clamp && value > 1.0 {
                return Ok(1.0);
            }
            return Err(Error::OperatorEntry { i, j, value });
        }
        Ok(value)
    };
    let pair = |i: usize, j: usize| {
        let (a, b) = (labels.of(i), labels.of(j));
        tspec.between(a, b) * params.theta[i] * params.theta[j] * params.p[(a, b)]
    };

    if !compressed {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m[(i, j)] = check(i, j, pair(i, j))?;
                }
            }
        }
        return Ok(SpreadOperator::Dense(m));
    }

    // renumber classes in key order for a deterministic layout
    let order: BTreeMap<usize, usize> = keys
        .values()
        .enumerate()
        .map(|(pos, &first)| (first, pos))
        .collect();
    let mut class_of = vec![0; n];
    let mut representative = vec![Vec::new(); v];
    for i in 0..n {
        let c = order[&keys[&(labels.of(i), params.theta[i].to_bits())]];
        class_of[i] = c;
        if representative[c].len() < 2 {
            representative[c].push(i);
        }
    }
    let mut phi = DMatrix::zeros(v, v);
    for a in 0..v {
        for b in 0..v {
            let i = representative[a][0];
            let j = if a == b {
                match representative[a].get(1) {
                    Some(&j) => j,
                    // a singleton class never pairs with itself
                    None => {
                        phi[(a, b)] = pair(i, i).min(1.0);
                        continue;
                    }
                }
            } else {
                representative[b][0]
            };
            phi[(a, b)] = check(i, j, pair(i, j))?;
        }
    }
    Ok(SpreadOperator::Compressed(CompressedOperator {
        phi,
        class_of,
    }))
}

/// `m̃ = (1/n) 1ᵀ Ψᵗ s`.
pub fn approx_total(op: &SpreadOperator, s: &[f64], t: usize) -> f64 {
    op.power_apply(s, t).iter().sum::<f64>() / op.n() as f64
}

/// Linearized per-community coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxCoverage {
    /// `q̃_k = Z_kᵀ Ψᵗ s / (π_k n)`; not clamped to `[0, 1]`.
    pub q: Vec<f64>,
    /// `m̃`.
    pub total: f64,
    /// True when some `q̃_k` exceeds one.
    pub exceeds_one: bool,
}

pub fn approx_by_community(
    op: &SpreadOperator,
    labels: &CommunityLabels,
    pi: &[f64],
    s: &[f64],
    t: usize,
) -> Result<ApproxCoverage> {
    let n = op.n();
    if s.len() != n || labels.n() != n {
        return Err(Error::Dimension {
            what: "seed vector",
            got: s.len(),
            expected: n,
        });
    }
    if pi.len() != labels.k() {
        return Err(Error::Dimension {
            what: "pi",
            got: pi.len(),
            expected: labels.k(),
        });
    }
    let spread = op.power_apply(s, t);
    let mut sums = vec![0.0; labels.k()];
    for (i, v) in spread.iter().enumerate() {
        sums[labels.of(i)] += v;
    }
    let q: Vec<f64> = sums
        .iter()
        .zip(pi)
        .map(|(s, p)| s / (p * n as f64))
        .collect();
    let total = spread.iter().sum::<f64>() / n as f64;
    let exceeds_one = q.iter().any(|&v| v > 1.0);
    Ok(ApproxCoverage {
        q,
        total,
        exceeds_one,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixed_labels, sbm_weight_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sbm1() -> (DcsbmParams, CommunityLabels) {
        let p = sbm_weight_matrix(&[10.0, 5.0, 2.5], 1.0, 0.01).unwrap();
        let params = DcsbmParams::sbm(vec![0.7, 0.2, 0.1], p, 1000);
        let labels = fixed_labels(&params.pi, 1000).unwrap();
        (params, labels)
    }

    #[test]
    fn zero_beta_keeps_only_seeds() {
        let net = Network::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let seeds = [true, false, false, true];
        let trace = simulate_ic(
            &net,
            &TransmissionSpec::Scalar(0.0),
            &seeds,
            5,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(trace.active_by(5).collect::<Vec<_>>(), vec![0, 3]);
    }

    #[test]
    fn two_nodes_certain_transmission() {
        let net = Network::from_edges(2, [(0, 1)]);
        let trace = simulate_ic(
            &net,
            &TransmissionSpec::Scalar(1.0),
            &[true, false],
            1,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(trace.activated_at, vec![Some(0), Some(1)]);
        assert_eq!(trace.frontiers, vec![vec![0], vec![1]]);
    }

    #[test]
    fn path_end_activation_matches_quarter() {
        let net = Network::from_edges(3, [(0, 1), (1, 2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let runs = 100_000;
        let hits = (0..runs)
            .filter(|_| {
                let tr = simulate_ic(
                    &net,
                    &TransmissionSpec::Scalar(0.5),
                    &[true, false, false],
                    2,
                    &mut rng,
                )
                .unwrap();
                tr.activated_at[2].is_some()
            })
            .count();
        let est = hits as f64 / runs as f64;
        let se = (0.25f64 * 0.75 / runs as f64).sqrt();
        assert!((est - 0.25).abs() < 3.0 * se, "{est}");
    }

    #[test]
    fn trace_frontier_invariants() {
        let (params, labels) = sbm1();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = generate_network(&params, &labels, &mut rng).unwrap();
        let mut seeds = vec![false; 1000];
        for i in (0..1000).step_by(97) {
            seeds[i] = true;
        }
        let trace = simulate_ic(&net, &TransmissionSpec::Scalar(0.2), &seeds, 3, &mut rng).unwrap();
        let mut seen = vec![false; 1000];
        for (step, f) in trace.frontiers.iter().enumerate() {
            for &i in f {
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(trace.activated_at[i], Some(step));
                if step > 0 {
                    assert!(net
                        .neighbors(i)
                        .iter()
                        .any(|&j| trace.activated_at[j] == Some(step - 1)));
                }
            }
        }
    }

    #[test]
    fn coverage_of_fully_seeded_network() {
        let labels = CommunityLabels::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let net = Network::from_edges(6, []);
        let trace = cascade(&net, &[true; 6], 1, |_, _| false);
        let cov = coverage(&trace, &labels, 1).unwrap();
        assert_eq!(cov.q, vec![1.0; 3]);
        assert_eq!(cov.m, 1.0);
        assert!((cov.entropy - 1.0).abs() < 1e-12);
        assert!(matches!(
            coverage(&trace, &labels, 2),
            Err(Error::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn coverage_single_community_seeds() {
        let labels = CommunityLabels::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let net = Network::from_edges(6, [(0, 2), (1, 4)]);
        let seeds = [true, false, false, false, false, false];
        let trace = simulate_ic(
            &net,
            &TransmissionSpec::Scalar(0.0),
            &seeds,
            1,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let cov = coverage(&trace, &labels, 1).unwrap();
        assert_eq!(cov.p, vec![1.0, 0.0, 0.0]);
        assert_eq!(cov.entropy, 0.0);
    }

    #[test]
    fn exact_two_nodes_one_step() {
        let labels = CommunityLabels::new(vec![0, 0], 1).unwrap();
        let params = DcsbmParams::new(vec![1.0], DMatrix::from_element(1, 1, 0.5), vec![0.8, 1.2]);
        let probs = exact_activation_probs(
            &params,
            &labels,
            &TransmissionSpec::Scalar(0.3),
            &[true, false],
            1,
        )
        .unwrap();
        assert_eq!(probs[0], 1.0);
        assert!((probs[1] - 0.8 * 1.2 * 0.3 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_two_sources() {
        // target in community 0, one seed in each of two identical communities
        let labels = CommunityLabels::new(vec![0, 1, 2], 3).unwrap();
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 0.4, 0.4, 0.4, 0.0, 0.0, 0.4, 0.0, 0.0]);
        let params = DcsbmParams::sbm(vec![1.0 / 3.0; 3], p, 3);
        let probs = exact_activation_probs(
            &params,
            &labels,
            &TransmissionSpec::Scalar(0.5),
            &[false, true, true],
            1,
        )
        .unwrap();
        let bp: f64 = 0.5 * 0.4;
        assert!((probs[0] - (1.0 - (1.0 - bp).powi(2))).abs() < 1e-15);
    }

    #[test]
    fn exact_zero_beta_is_seed_vector() {
        let (params, labels) = sbm1();
        let mut seeds = vec![false; 1000];
        seeds[3] = true;
        seeds[950] = true;
        let probs =
            exact_activation_probs(&params, &labels, &TransmissionSpec::Scalar(0.0), &seeds, 3)
                .unwrap();
        for (p, s) in probs.iter().zip(&seeds) {
            assert_eq!(*p, if *s { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn psi_entries_from_definition() {
        let labels = CommunityLabels::new(vec![0, 0], 1).unwrap();
        let params = DcsbmParams::sbm(vec![1.0], DMatrix::from_element(1, 1, 0.1), 2);
        let op = build_psi_with(
            &params,
            &labels,
            &TransmissionSpec::Scalar(0.2),
            PsiOptions {
                form: PsiForm::Dense,
                clamp: false,
            },
        )
        .unwrap();
        let d = op.to_dense();
        assert_eq!(d[(0, 0)], 0.0);
        assert!((d[(0, 1)] - 0.02).abs() < 1e-15);
        assert!((d[(1, 0)] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn sbm_psi_is_beta_times_p() {
        let (params, labels) = sbm1();
        let op = build_psi(&params, &labels, &TransmissionSpec::Scalar(0.2)).unwrap();
        assert!(matches!(op, SpreadOperator::Compressed(_)));
        assert!((op.entry(0, 999) - 0.2 * 0.01).abs() < 1e-15);
        assert!((op.entry(1, 0) - 0.2 * 0.1).abs() < 1e-15);
        assert_eq!(op.entry(5, 5), 0.0);
    }

    #[test]
    fn compressed_matches_dense_on_random_probes() {
        let (params, labels) = sbm1();
        let tspec = TransmissionSpec::within_between(3, 0.3, 0.1);
        let dense = build_psi_with(
            &params,
            &labels,
            &tspec,
            PsiOptions {
                form: PsiForm::Dense,
                clamp: false,
            },
        )
        .unwrap();
        let comp = build_psi_with(
            &params,
            &labels,
            &tspec,
            PsiOptions {
                form: PsiForm::Compressed,
                clamp: false,
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let s: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            for t in 0..3 {
                let a = dense.power_apply(&s, t);
                let b = comp.power_apply(&s, t);
                assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
                let a = dense.power_apply_transpose(&s, t);
                let b = comp.power_apply_transpose(&s, t);
                assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
            }
        }
    }

    #[test]
    fn entry_above_one_errors_unless_clamped() {
        let labels = CommunityLabels::new(vec![0, 0], 1).unwrap();
        let params = DcsbmParams::new(vec![1.0], DMatrix::from_element(1, 1, 0.9), vec![1.5, 1.5]);
        let tspec = TransmissionSpec::Scalar(1.0);
        assert!(matches!(
            build_psi(&params, &labels, &tspec),
            Err(Error::OperatorEntry { .. })
        ));
        let op = build_psi_with(
            &params,
            &labels,
            &tspec,
            PsiOptions {
                form: PsiForm::Dense,
                clamp: true,
            },
        )
        .unwrap();
        assert_eq!(op.entry(0, 1), 1.0);
    }

    #[test]
    fn approx_at_time_zero_counts_seeds() {
        let (params, labels) = sbm1();
        let op = build_psi(&params, &labels, &TransmissionSpec::Scalar(0.2)).unwrap();
        let mut s = vec![0.0; 1000];
        for v in s.iter_mut().take(30) {
            *v = 1.0;
        }
        assert!((approx_total(&op, &s, 0) - 0.03).abs() < 1e-15);
        let q = approx_by_community(&op, &labels, &params.pi, &s, 0).unwrap();
        assert!((q.q[0] - 30.0 / 700.0).abs() < 1e-15);
        assert_eq!(&q.q[1..], &[0.0, 0.0]);
    }

    #[test]
    fn approx_one_step_expansion() {
        let (params, labels) = sbm1();
        let beta = 0.2;
        let op = build_psi(&params, &labels, &TransmissionSpec::Scalar(beta)).unwrap();
        let mut s = vec![0.0; 1000];
        for i in [0, 10, 750, 990] {
            s[i] = 1.0;
        }
        let mut expected = 0.0;
        for i in 0..1000 {
            for j in 0..1000 {
                if i != j {
                    expected += beta * params.p[(labels.of(i), labels.of(j))] * s[j];
                }
            }
        }
        assert!((approx_total(&op, &s, 1) - expected / 1000.0).abs() < 1e-14);
        let q = approx_by_community(&op, &labels, &params.pi, &s, 1).unwrap();
        let weighted: f64 =
            q.q.iter()
                .zip(&params.pi)
                .map(|(q, p)| q * p * 1000.0)
                .sum();
        assert!((weighted - 1000.0 * q.total).abs() < 1e-12);
    }
}
