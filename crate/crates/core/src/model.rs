//! Degree-corrected stochastic block model: parameters, validation, label
//! sampling and network generation.
//!
//! Communities are indexed from 0 internally. Files written by the CLI use
//! 1-based community labels.

use std::fmt;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;

const PI_SUM_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;
const IDENTIFIABILITY_TOL: f64 = 1e-9;

/// Community assignment for every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityLabels {
    labels: Vec<usize>,
    k: usize,
}

impl CommunityLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((i, &c)) = labels.iter().enumerate().find(|(_, &c)| c >= k) {
            return Err(Error::InvalidParams(vec![Violation::LabelOutOfRange {
                node: i,
                label: c,
                k,
            }]));
        }
        Ok(Self { labels, k })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn of(&self, node: usize) -> usize {
        self.labels[node]
    }

    /// Community sizes `n_k`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }

    /// Node indices grouped by community, each group in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &c) in self.labels.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    /// The n×K indicator matrix `Z`.
    pub fn membership_matrix(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.n(), self.k);
        for (i, &c) in self.labels.iter().enumerate() {
            z[(i, c)] = 1.0;
        }
        z
    }
}

/// Parameters of a DCSBM. A plain SBM has every `theta` equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsbmParams {
    pub pi: Vec<f64>,
    pub p: DMatrix<f64>,
    pub theta: Vec<f64>,
}

/// A single failed invariant reported by [`DcsbmParams::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    PiNonPositive {
        k: usize,
        value: f64,
    },
    PiSum {
        sum: f64,
    },
    PShape {
        rows: usize,
        cols: usize,
        k: usize,
    },
    PAsymmetric {
        k: usize,
        l: usize,
        pkl: f64,
        plk: f64,
    },
    PEntry {
        k: usize,
        l: usize,
        value: f64,
    },
    ThetaNonPositive {
        node: usize,
        value: f64,
    },
    LabelCount {
        labels: usize,
        n: usize,
    },
    LabelOutOfRange {
        node: usize,
        label: usize,
        k: usize,
    },
    Identifiability {
        k: usize,
        mean: f64,
    },
    EdgeProbability {
        i: usize,
        j: usize,
        prob: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PiNonPositive { k, value } => write!(f, "pi[{k}] = {value} is not positive"),
            Violation::PiSum { sum } => write!(f, "pi sums to {sum}"),
            Violation::PShape { rows, cols, k } => {
                write!(f, "P is {rows}x{cols}, expected {k}x{k}")
            }
            Violation::PAsymmetric { k, l, pkl, plk } => {
                write!(
                    f,
                    "P is not symmetric: P[{k},{l}] = {pkl}, P[{l},{k}] = {plk}"
                )
            }
            Violation::PEntry { k, l, value } => {
                write!(f, "P[{k},{l}] = {value} is outside [0, 1]")
            }
            Violation::ThetaNonPositive { node, value } => {
                write!(f, "theta[{node}] = {value} is not positive")
            }
            Violation::LabelCount { labels, n } => write!(f, "{labels} labels for {n} nodes"),
            Violation::LabelOutOfRange { node, label, k } => {
                write!(f, "label {label} of node {node} is outside 0..{k}")
            }
            Violation::Identifiability { k, mean } => {
                write!(
                    f,
                    "community {k}: normalized theta mean is {mean}, expected 1"
                )
            }
            Violation::EdgeProbability { i, j, prob } => {
                write!(f, "edge probability {prob} > 1 for pair ({i}, {j})")
            }
        }
    }
}

impl DcsbmParams {
    pub fn new(pi: Vec<f64>, p: DMatrix<f64>, theta: Vec<f64>) -> Self {
        Self { pi, p, theta }
    }

    /// Plain SBM: all degree parameters equal to one.
    pub fn sbm(pi: Vec<f64>, p: DMatrix<f64>, n: usize) -> Self {
        Self::new(pi, p, vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    /// Checks the label-independent invariants.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let k = self.k();
        for (idx, &v) in self.pi.iter().enumerate() {
            if !(v > 0.0) {
                out.push(Violation::PiNonPositive { k: idx, value: v });
            }
        }
        let sum: f64 = self.pi.iter().sum();
        if (sum - 1.0).abs() > PI_SUM_TOL {
            out.push(Violation::PiSum { sum });
        }
        if self.p.nrows() != k || self.p.ncols() != k {
            out.push(Violation::PShape {
                rows: self.p.nrows(),
                cols: self.p.ncols(),
                k,
            });
        } else {
            for a in 0..k {
                for b in 0..k {
                    let v = self.p[(a, b)];
                    if !(0.0..=1.0).contains(&v) {
                        out.push(Violation::PEntry {
                            k: a,
                            l: b,
                            value: v,
                        });
                    }
                    if a < b && (v - self.p[(b, a)]).abs() > SYMMETRY_TOL {
                        out.push(Violation::PAsymmetric {
                            k: a,
                            l: b,
                            pkl: v,
                            plk: self.p[(b, a)],
                        });
                    }
                }
            }
        }
        for (i, &t) in self.theta.iter().enumerate() {
            if !(t > 0.0) || !t.is_finite() {
                out.push(Violation::ThetaNonPositive { node: i, value: t });
            }
        }
        out
    }

    /// Checks every invariant, including the per-community identifiability
    /// constraint and `θ_i θ_j P ≤ 1` over realized pairs.
    pub fn validate_with_labels(&self, labels: &CommunityLabels) -> Vec<Violation> {
        let mut out = self.validate();
        if labels.n() != self.n() {
            out.push(Violation::LabelCount {
                labels: labels.n(),
                n: self.n(),
            });
            return out;
        }
        if labels.k() != self.k() || !out.is_empty() {
            return out;
        }
        let n = self.n() as f64;
        let members = labels.members();
        for (k, nodes) in members.iter().enumerate() {
            if nodes.is_empty() {
                continue;
            }
            let mean = nodes.iter().map(|&i| self.theta[i]).sum::<f64>() / (self.pi[k] * n);
            if (mean - 1.0).abs() > IDENTIFIABILITY_TOL {
                out.push(Violation::Identifiability { k, mean });
            }
        }
        if let Some((i, j, prob)) = self.max_edge_probability(&members) {
            if prob > 1.0 {
                out.push(Violation::EdgeProbability { i, j, prob });
            }
        }
        out
    }

    /// Largest `θ_i θ_j P_{c_i c_j}` over distinct pairs.
    fn max_edge_probability(&self, members: &[Vec<usize>]) -> Option<(usize, usize, f64)> {
        // two largest theta per community suffice
        let top: Vec<Vec<usize>> = members
            .iter()
            .map(|nodes| {
                let mut sorted = nodes.clone();
                sorted.sort_by(|&a, &b| self.theta[b].total_cmp(&self.theta[a]).then(a.cmp(&b)));
                sorted.truncate(2);
                sorted
            })
            .collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..top.len() {
            for b in a..top.len() {
                let (i, j) = if a == b {
                    match top[a].as_slice() {
                        [i, j] => (*i, *j),
                        _ => continue,
                    }
                } else {
                    match (top[a].first(), top[b].first()) {
                        (Some(&i), Some(&j)) => (i, j),
                        _ => continue,
                    }
                };
                let prob = self.theta[i] * self.theta[j] * self.p[(a, b)];
                if best.is_none_or(|(_, _, p)| prob > p) {
                    best = Some((i.min(j), i.max(j), prob));
                }
            }
        }
        best
    }

    pub fn ensure_valid(&self, labels: &CommunityLabels) -> Result<()> {
        let v = self.validate_with_labels(labels);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v))
        }
    }

    /// Expected edge probability between nodes `i` and `j`.
    pub fn edge_probability(&self, labels: &CommunityLabels, i: usize, j: usize) -> f64 {
        self.theta[i] * self.theta[j] * self.p[(labels.of(i), labels.of(j))]
    }
}

/// Rescales `theta_raw` within each community so that
/// `(1/(π_k n)) Σ_{i∈C_k} θ_i = 1`. Ratios within a community are preserved.
pub fn normalize_theta(
    theta_raw: &[f64],
    labels: &CommunityLabels,
    pi: &[f64],
) -> Result<Vec<f64>> {
    if theta_raw.len() != labels.n() {
        return Err(Error::Dimension {
            what: "theta",
            got: theta_raw.len(),
            expected: labels.n(),
        });
    }
    if pi.len() != labels.k() {
        return Err(Error::Dimension {
            what: "pi",
            got: pi.len(),
            expected: labels.k(),
        });
    }
    if let Some((i, &v)) = theta_raw.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::InvalidParams(vec![Violation::ThetaNonPositive {
            node: i,
            value: v,
        }]));
    }
    let n = labels.n() as f64;
    let mut sums = vec![0.0; labels.k()];
    for (i, &c) in labels.as_slice().iter().enumerate() {
        sums[c] += theta_raw[i];
    }
    if let Some(k) = sums.iter().position(|&s| s == 0.0) {
        return Err(Error::EmptyCommunity(k));
    }
    Ok(theta_raw
        .iter()
        .zip(labels.as_slice())
        .map(|(&t, &c)| t * pi[c] * n / sums[c])
        .collect())
}

fn check_distribution(pi: &[f64]) -> Result<()> {
    if pi.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if pi.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "negative entry in {pi:?}"
        )));
    }
    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

/// Draws i.i.d. labels from `Multinomial(pi)`.
pub fn sample_labels<R: Rng + ?Sized>(
    pi: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<CommunityLabels> {
    check_distribution(pi)?;
    let dist = WeightedIndex::new(pi).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let labels = (0..n).map(|_| dist.sample(rng)).collect();
    CommunityLabels::new(labels, pi.len())
}

/// Labels with community sizes fixed at the largest-remainder rounding of
/// `π_k n`, assigned in contiguous blocks.
pub fn fixed_labels(pi: &[f64], n: usize) -> Result<CommunityLabels> {
    check_distribution(pi)?;
    let sizes = largest_remainder(pi, n);
    let labels = sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
        .collect();
    CommunityLabels::new(labels, pi.len())
}

/// Apportions `total` by `weights` (which sum to 1) with the largest-remainder
/// rule. Ties go to the lowest index.
pub(crate) fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - out[a] as f64;
        let rb = quotas[b] - out[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &idx in order.iter().cycle().take(total.saturating_sub(assigned)) {
        out[idx] += 1;
    }
    out
}

/// Samples a network: each unordered pair independently with probability
/// `θ_i θ_j P_{c_i c_j}`. A probability above one is an error.
pub fn generate_network<R: Rng + ?Sized>(
    params: &DcsbmParams,
    labels: &CommunityLabels,
    rng: &mut R,
) -> Result<Network> {
    let mut violations = params.validate();
    if labels.n() != params.n() {
        violations.push(Violation::LabelCount {
            labels: labels.n(),
            n: params.n(),
        });
    }
    if labels.k() != params.k() {
        return Err(Error::Dimension {
            what: "labels.k",
            got: labels.k(),
            expected: params.k(),
        });
    }
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let n = params.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = params.edge_probability(labels, i, j);
            if prob > 1.0 {
                return Err(Error::ProbabilityAboveOne { i, j, prob });
            }
            if prob > 0.0 && rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    let mut net = Network::from_edges(n, edges);
    net.set_labels(labels.clone())?;
    Ok(net)
}

/// `scale · (off_diag everywhere, a_k on the diagonal)`.
pub fn sbm_weight_matrix(a: &[f64], off_diag: f64, scale: f64) -> Result<DMatrix<f64>> {
    let k = a.len();
    let p = DMatrix::from_fn(k, k, |r, c| scale * if r == c { a[r] } else { off_diag });
    let violations: Vec<Violation> = p
        .iter()
        .enumerate()
        .filter(|(_, &v)| !(0.0..=1.0).contains(&v))
        .map(|(idx, &v)| Violation::PEntry {
            k: idx % k,
            l: idx / k,
            value: v,
        })
        .collect();
    if violations.is_empty() {
        Ok(p)
    } else {
        Err(Error::InvalidParams(violations))
    }
}

/// Source of raw (un-normalized) degree parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    /// `"constant"` or `"poisson(5)"`.
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Named("constant".into())
    }
}

impl ThetaSpec {
    /// Raw draws. `poisson(mean)` draws `Poisson(mean) + 1` so no value is zero.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            ThetaSpec::Explicit(v) if v.len() == n => Ok(v.clone()),
            ThetaSpec::Explicit(v) => Err(Error::Dimension {
                what: "theta",
                got: v.len(),
                expected: n,
            }),
            ThetaSpec::Named(name) => {
                let name = name.trim();
                if name == "constant" {
                    return Ok(vec![1.0; n]);
                }
                let mean = name
                    .strip_prefix("poisson(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|m| m.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown theta source {name:?}")))?;
                let dist = Poisson::new(mean).map_err(|e| Error::Config(e.to_string()))?;
                Ok((0..n).map(|_| dist.sample(rng) + 1.0).collect())
            }
        }
    }
}

/// How community labels are produced for a synthetic realization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    #[default]
    Sampled,
    Fixed,
}

/// Generative description of a synthetic model, before labels and θ are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub pi: Vec<f64>,
    /// Row-major K×K.
    pub p: Vec<f64>,
    #[serde(default)]
    pub theta: ThetaSpec,
    #[serde(default)]
    pub labels: LabelMode,
}

/// One draw of labels and degree parameters from a [`ModelSpec`].
#[derive(Debug, Clone)]
pub struct Realization {
    pub params: DcsbmParams,
    pub labels: CommunityLabels,
    pub theta_raw: Vec<f64>,
}

impl ModelSpec {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn p_matrix(&self) -> Result<DMatrix<f64>> {
        let k = self.k();
        if self.p.len() != k * k {
            return Err(Error::Dimension {
                what: "P",
                got: self.p.len(),
                expected: k * k,
            });
        }
        Ok(DMatrix::from_row_slice(k, k, &self.p))
    }

    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Realization> {
        let labels = match self.labels {
            LabelMode::Sampled => sample_labels(&self.pi, self.n, rng)?,
            LabelMode::Fixed => fixed_labels(&self.pi, self.n)?,
        };
        let theta_raw = self.theta.draw(self.n, rng)?;
        let theta = normalize_theta(&theta_raw, &labels, &self.pi)?;
        let params = DcsbmParams::new(self.pi.clone(), self.p_matrix()?, theta);
        params.ensure_valid(&labels)?;
        Ok(Realization {
            params,
            labels,
            theta_raw,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sbm1_p() -> DMatrix<f64> {
        sbm_weight_matrix(&[10.0, 5.0, 2.5], 1.0, 0.01).unwrap()
    }

    #[test]
    fn sbm1_params_validate() {
        let params = DcsbmParams::sbm(vec![0.7, 0.2, 0.1], sbm1_p(), 1000);
        assert!(params.validate().is_empty());
        let labels = fixed_labels(&params.pi, 1000).unwrap();
        assert_eq!(labels.sizes(), vec![700, 200, 100]);
        assert!(params.validate_with_labels(&labels).is_empty());
    }

    #[test]
    fn pi_sum_violation() {
        let params = DcsbmParams::sbm(vec![0.5, 0.6], DMatrix::from_element(2, 2, 0.1), 4);
        let v = params.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::PiSum { sum } if (sum - 1.1).abs() < 1e-12));
        assert!(v[0].to_string().starts_with("pi sums to 1.1"));
    }

    #[test]
    fn asymmetric_p_violation() {
        let p = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.2, 0.3]);
        let v = DcsbmParams::sbm(vec![0.5, 0.5], p, 4).validate();
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::PAsymmetric { k: 0, l: 1, .. })));
    }

    #[test]
    fn edge_probability_violation_names_pair() {
        let labels = CommunityLabels::new(vec![0, 0, 0], 1).unwrap();
        let p = DMatrix::from_element(1, 1, 0.8);
        let params = DcsbmParams::new(vec![1.0], p, vec![1.8, 0.9, 0.3]);
        let v = params.validate_with_labels(&labels);
        assert!(
            v.iter()
                .any(|x| matches!(x, Violation::EdgeProbability { i: 0, j: 1, .. })),
            "{v:?}"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            generate_network(&params, &labels, &mut rng),
            Err(Error::ProbabilityAboveOne { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn normalize_constant_theta() {
        let labels = CommunityLabels::new(vec![0, 0, 0, 1], 2).unwrap();
        let pi = [0.5, 0.5];
        let theta = normalize_theta(&[7.0; 4], &labels, &pi).unwrap();
        // n_k / (π_k n): 3/2 and 1/2
        assert!((theta[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((theta[3] - 2.0).abs() < 1e-15);
        let ones = normalize_theta(
            &[3.0, 5.0],
            &CommunityLabels::new(vec![0, 1], 2).unwrap(),
            &pi,
        )
        .unwrap();
        assert_eq!(ones, vec![1.0, 1.0]);
    }

    #[test]
    fn normalize_poisson_theta_meets_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pi = vec![0.5, 0.3, 0.2];
        let labels = sample_labels(&pi, 1000, &mut rng).unwrap();
        let raw = ThetaSpec::Named("poisson(5)".into())
            .draw(1000, &mut rng)
            .unwrap();
        let theta = normalize_theta(&raw, &labels, &pi).unwrap();
        for (k, nodes) in labels.members().iter().enumerate() {
            let mean = nodes.iter().map(|&i| theta[i]).sum::<f64>() / (pi[k] * 1000.0);
            assert!((mean - 1.0).abs() < 1e-12);
        }
        let again = normalize_theta(&theta, &labels, &pi).unwrap();
        for (a, b) in theta.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_empty_community_errors() {
        let labels = CommunityLabels::new(vec![0, 0], 2).unwrap();
        assert!(matches!(
            normalize_theta(&[1.0, 1.0], &labels, &[0.5, 0.5]),
            Err(Error::EmptyCommunity(1))
        ));
    }

    #[test]
    fn degenerate_label_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels = sample_labels(&[1.0, 0.0, 0.0], 50, &mut rng).unwrap();
        assert!(labels.as_slice().iter().all(|&c| c == 0));
    }

    #[test]
    fn sampled_label_counts_within_four_sigma() {
        let pi = [0.7, 0.2, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let labels = sample_labels(&pi, 1000, &mut rng).unwrap();
        for (k, &size) in labels.sizes().iter().enumerate() {
            let sigma = (1000.0 * pi[k] * (1.0 - pi[k])).sqrt();
            assert!((size as f64 - 1000.0 * pi[k]).abs() < 4.0 * sigma);
        }
        let a = sample_labels(&pi, 100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_labels(&pi, 100, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_matrix_gives_empty_graph() {
        let p = sbm_weight_matrix(&[0.0, 0.0], 0.0, 1.0).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
        let params = DcsbmParams::sbm(vec![0.5, 0.5], p, 20);
        let labels = fixed_labels(&params.pi, 20).unwrap();
        let net = generate_network(&params, &labels, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn weight_matrices_match_recipes() {
        let p = sbm1_p();
        assert!((p[(0, 0)] - 0.1).abs() < 1e-15);
        assert!((p[(2, 2)] - 0.025).abs() < 1e-15);
        assert!((p[(0, 2)] - 0.01).abs() < 1e-15);
        let p3 = sbm_weight_matrix(&[5.0; 3], 1.0, 0.01).unwrap();
        assert!(p3.iter().all(|&v| v == 0.05 || v == 0.01));
        assert!(sbm_weight_matrix(&[200.0], 1.0, 0.01).is_err());
    }

    #[test]
    fn largest_remainder_sums() {
        assert_eq!(largest_remainder(&[0.7, 0.2, 0.1], 30), vec![21, 6, 3]);
        assert_eq!(largest_remainder(&[1.0 / 3.0; 3], 10), vec![4, 3, 3]);
    }
}
