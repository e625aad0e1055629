//! Entropy fairness and the linearized coverage-plus-fairness objective
//! `f̃(x) = m̃(x) + λ H(p̃(x))` over relaxed per-class seed fractions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CommunityLabels;
use crate::optimizer::UniqueClasses;
use crate::spread::{approx_by_community, SpreadOperator};

/// Floor used when normalizing coverage and inside entropy derivatives.
pub const DEFAULT_EPSILON: f64 = 1e-9;

const DISTRIBUTION_TOL: f64 = 1e-9;

/// Entropy with logarithm base `K`, so a uniform vector scores 1.
///
/// A single community (`K = 1`) is trivially balanced and scores 1.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some(v) = p.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "entry {v} is negative or not finite"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    let k = p.len();
    if k <= 1 {
        return 1.0;
    }
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    h / (k as f64).ln()
}

/// Rescales `q` to sum to one. Falls back to uniform when `Σq < epsilon`;
/// the flag reports the fallback.
pub fn normalize_coverage(q: &[f64], epsilon: f64) -> (Vec<f64>, bool) {
    let sum: f64 = q.iter().sum();
    if sum < epsilon || q.is_empty() {
        let k = q.len().max(1);
        return (vec![1.0 / k as f64; q.len()], true);
    }
    (q.iter().map(|v| v / sum).collect(), false)
}

/// Gini coefficient `Σ_i Σ_j |x_i − x_j| / (2 n Σ_j x_j)`. Reporting only.
pub fn gini(x: &[f64]) -> f64 {
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let diff: f64 = x
        .iter()
        .map(|a| x.iter().map(|b| (a - b).abs()).sum::<f64>())
        .sum();
    diff / (2.0 * x.len() as f64 * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub lambda: f64,
    pub t: usize,
    pub budget: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl ObjectiveConfig {
    pub fn new(lambda: f64, t: usize, budget: usize) -> Self {
        Self {
            lambda,
            t,
            budget,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda {} must be nonnegative",
                self.lambda
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-6) {
            return Err(Error::Config(format!(
                "epsilon {} outside (0, 1e-6]",
                self.epsilon
            )));
        }
        if self.budget > n {
            return Err(Error::BudgetTooLarge {
                budget: self.budget,
                available: n,
            });
        }
        Ok(())
    }
}

/// Objective value with its components.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    /// `m̃`.
    pub coverage: f64,
    /// `H(p̃)`.
    pub entropy: f64,
    /// `q̃`.
    pub q: Vec<f64>,
    /// `p̃`.
    pub p: Vec<f64>,
    /// Set when `Σq̃` fell below epsilon and `p̃` is the uniform fallback.
    pub degenerate: bool,
}

/// A differentiable objective to be maximized.
pub trait SmoothObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// `f̃` with the linear map `x ↦ q̃` precomputed.
///
/// Row `k` of the map is `Z_kᵀ Ψᵗ V / (π_k n)`, obtained from `K` chains of
/// transposed products, so each evaluation costs `O(K v)`.
#[derive(Debug, Clone)]
pub struct ApproxObjective {
    map: DMatrix<f64>,
    pi: Vec<f64>,
    config: ObjectiveConfig,
}

impl ApproxObjective {
    pub fn new(
        op: &SpreadOperator,
        labels: &CommunityLabels,
        pi: &[f64],
        classes: &UniqueClasses,
        config: ObjectiveConfig,
    ) -> Result<Self> {
        let n = op.n();
        check_dims(n, labels, pi, classes)?;
        config.validate(n)?;
        let k = labels.k();
        let v = classes.len();
        let mut map = DMatrix::zeros(k, v);
        for c in 0..k {
            let indicator: Vec<f64> = labels
                .as_slice()
                .iter()
                .map(|&l| if l == c { 1.0 } else { 0.0 })
                .collect();
            let back = op.power_apply_transpose(&indicator, config.t);
            let scale = 1.0 / (pi[c] * n as f64);
            for (i, val) in back.iter().enumerate() {
                map[(c, classes.class_of(i))] += val * scale;
            }
        }
        Ok(Self {
            map,
            pi: pi.to_vec(),
            config,
        })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    /// The K×v map from relaxed class fractions to `q̃`.
    pub fn coverage_map(&self) -> &DMatrix<f64> {
        &self.map
    }

    pub fn evaluate(&self, x: &[f64]) -> ObjectiveEval {
        let q = (&self.map * DVector::from_column_slice(x))
            .as_slice()
            .to_vec();
        assemble(q, &self.pi, &self.config)
    }

    /// Gradient of `f̃` by the chain rule through `x ↦ q̃ ↦ p̃ ↦ H`.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let q = (&self.map * DVector::from_column_slice(x))
            .as_slice()
            .to_vec();
        let mut dq: Vec<f64> = self.pi.clone();
        let k = q.len();
        let sum: f64 = q.iter().sum();
        if k > 1 && sum >= self.config.epsilon && self.config.lambda != 0.0 {
            let logs: Vec<f64> = q
                .iter()
                .map(|v| (v / sum).max(self.config.epsilon).ln())
                .collect();
            let mean_log: f64 = q.iter().zip(&logs).map(|(v, l)| v / sum * l).sum();
            let denom = sum * (k as f64).ln();
            for (d, l) in dq.iter_mut().zip(&logs) {
                *d -= self.config.lambda * (l - mean_log) / denom;
            }
        }
        self.map.tr_mul(&DVector::from_vec(dq)).as_slice().to_vec()
    }
}

impl SmoothObjective for ApproxObjective {
    fn dim(&self) -> usize {
        self.map.ncols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x).value
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad(x)
    }
}

fn assemble(q: Vec<f64>, pi: &[f64], config: &ObjectiveConfig) -> ObjectiveEval {
    let coverage: f64 = q.iter().zip(pi).map(|(q, p)| q * p).sum();
    let (p, degenerate) = normalize_coverage(&q, config.epsilon);
    let entropy = entropy_unchecked(&p);
    ObjectiveEval {
        value: coverage + config.lambda * entropy,
        coverage,
        entropy,
        q,
        p,
        degenerate,
    }
}

fn check_dims(
    n: usize,
    labels: &CommunityLabels,
    pi: &[f64],
    classes: &UniqueClasses,
) -> Result<()> {
    if labels.n() != n {
        return Err(Error::Dimension {
            what: "labels",
            got: labels.n(),
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
    if classes.n() != n {
        return Err(Error::Dimension {
            what: "classes",
            got: classes.n(),
            expected: n,
        });
    }
    Ok(())
}

/// Evaluates `f̃` by expanding `s = V x` and applying `Ψ` `t` times.
pub fn objective_value(
    op: &SpreadOperator,
    labels: &CommunityLabels,
    pi: &[f64],
    x: &[f64],
    classes: &UniqueClasses,
    config: &ObjectiveConfig,
) -> Result<ObjectiveEval> {
    check_dims(op.n(), labels, pi, classes)?;
    if x.len() != classes.len() {
        return Err(Error::Dimension {
            what: "x",
            got: x.len(),
            expected: classes.len(),
        });
    }
    let s = classes.expand_relaxed(x);
    let approx = approx_by_community(op, labels, pi, &s, config.t)?;
    Ok(assemble(approx.q, pi, config))
}

/// Analytic gradient of `f̃` with respect to `x`.
pub fn objective_gradient(
    op: &SpreadOperator,
    labels: &CommunityLabels,
    pi: &[f64],
    x: &[f64],
    classes: &UniqueClasses,
    config: &ObjectiveConfig,
) -> Result<Vec<f64>> {
    if x.len() != classes.len() {
        return Err(Error::Dimension {
            what: "x",
            got: x.len(),
            expected: classes.len(),
        });
    }
    Ok(ApproxObjective::new(op, labels, pi, classes, *config)?.grad(x))
}
