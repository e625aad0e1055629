//! Seed allocation: stochastically identical node classes, the relaxed
//! box-and-budget constrained ascent, rounding to integer counts, and the
//! baseline strategies.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{largest_remainder, CommunityLabels, DcsbmParams};
use crate::objective::{ApproxObjective, ObjectiveConfig, ObjectiveEval, SmoothObjective};
use crate::spread::SpreadOperator;

/// Nodes grouped into classes sharing community and degree parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueClasses {
    class_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    community: Vec<usize>,
    theta: Vec<f64>,
}

impl UniqueClasses {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_of(&self, node: usize) -> usize {
        self.class_of[node]
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    /// Community of each class.
    pub fn communities(&self) -> &[usize] {
        &self.community
    }

    /// Representative degree parameter of each class.
    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    /// Multiplicities `w = 1ᵀ V`.
    pub fn weights(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.len() as f64).collect()
    }

    /// The n×v membership matrix `V`.
    pub fn membership_matrix(&self) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(self.n(), self.len());
        for (i, &c) in self.class_of.iter().enumerate() {
            v[(i, c)] = 1.0;
        }
        v
    }

    /// `s = V x`.
    pub fn expand_relaxed(&self, x: &[f64]) -> Vec<f64> {
        self.class_of.iter().map(|&c| x[c]).collect()
    }

    /// Sums per-class counts into per-community counts.
    pub fn community_totals(&self, y: &[usize], k: usize) -> Vec<usize> {
        let mut out = vec![0; k];
        for (j, &c) in self.community.iter().enumerate() {
            out[c] += y[j];
        }
        out
    }

    /// One class per community.
    pub fn from_communities(labels: &CommunityLabels) -> Self {
        let members = labels.members();
        Self {
            class_of: labels.as_slice().to_vec(),
            community: (0..labels.k()).collect(),
            theta: vec![1.0; labels.k()],
            members,
        }
    }

    /// Classes from an arbitrary key per node; classes are ordered by key.
    pub fn from_keys<K: Ord + Clone>(keys: &[K], community: &[usize], theta: &[f64]) -> Self {
        let mut index: BTreeMap<K, Vec<usize>> = BTreeMap::new();
        for (i, key) in keys.iter().enumerate() {
            index.entry(key.clone()).or_default().push(i);
        }
        let mut class_of = vec![0; keys.len()];
        let mut members = Vec::with_capacity(index.len());
        let mut comm = Vec::with_capacity(index.len());
        let mut th = Vec::with_capacity(index.len());
        for (c, nodes) in index.into_values().enumerate() {
            for &i in &nodes {
                class_of[i] = c;
            }
            comm.push(community[nodes[0]]);
            th.push(nodes.iter().map(|&i| theta[i]).sum::<f64>() / nodes.len() as f64);
            members.push(nodes);
        }
        Self {
            class_of,
            members,
            community: comm,
            theta: th,
        }
    }
}

/// Groups nodes by community and `θ` rounded to a multiple of `theta_tol`
/// (exact equality when `theta_tol` is zero). Classes are ordered by
/// community, then by `θ`.
pub fn collapse_classes(
    params: &DcsbmParams,
    labels: &CommunityLabels,
    theta_tol: f64,
) -> UniqueClasses {
    let keys: Vec<(usize, i64, u64)> = (0..labels.n())
        .map(|i| {
            let th = params.theta[i];
            if theta_tol > 0.0 {
                (labels.of(i), (th / theta_tol).round() as i64, 0)
            } else {
                // order-preserving for positive floats
                (labels.of(i), 0, th.to_bits())
            }
        })
        .collect();
    UniqueClasses::from_keys(&keys, labels.as_slice(), &params.theta)
}

/// Stopping rules and restart policy for [`solve_relaxed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Total number of starts: the uniform point plus `restarts - 1` random
    /// feasible points.
    pub restarts: usize,
    pub gtol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            gtol: 1e-6,
            max_iter: 500,
            seed: 0,
        }
    }
}

/// Which constraints bind at a solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActiveConstraints {
    pub at_lower: usize,
    pub at_upper: usize,
    pub budget: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub start_value: f64,
    pub iterations: usize,
    /// `‖P(x + ∇f) − x‖₂` at the returned point.
    pub projected_gradient: f64,
    pub converged: bool,
    pub active: ActiveConstraints,
    /// Index of the start that produced this solution (0 is the uniform start).
    pub start: usize,
}

/// Euclidean projection onto `{x ∈ [0,1]^v : wᵀx ≤ budget}`.
pub fn project_feasible(z: &[f64], w: &[f64], budget: f64) -> Vec<f64> {
    let clip = |mu: f64| -> Vec<f64> {
        z.iter()
            .zip(w)
            .map(|(zi, wi)| (zi - mu * wi).clamp(0.0, 1.0))
            .collect()
    };
    let load = |x: &[f64]| -> f64 { x.iter().zip(w).map(|(a, b)| a * b).sum() };
    let x = clip(0.0);
    if load(&x) <= budget {
        return x;
    }
    // wᵀ clip(z − μw) is nonincreasing in μ and vanishes at μ = max z_j / w_j
    let mut lo = 0.0;
    let mut hi = z
        .iter()
        .zip(w)
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(zi, wi)| zi / wi)
        .fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if load(&clip(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1e-300) {
            break;
        }
    }
    clip(hi)
}

fn is_feasible(x: &[f64], w: &[f64], budget: f64) -> bool {
    x.iter().all(|&v| (-1e-12..=1.0 + 1e-9).contains(&v))
        && x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() <= budget + 1e-6
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_step(x: &[f64], g: &[f64], scale: f64, w: &[f64], budget: f64) -> Vec<f64> {
    let z: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + scale * b).collect();
    project_feasible(&z, w, budget)
        .iter()
        .zip(x)
        .map(|(p, a)| p - a)
        .collect()
}

/// Spectral projected-gradient ascent with Armijo backtracking from one
/// start. Every accepted step increases the objective.
fn ascend<O: SmoothObjective + ?Sized>(
    obj: &O,
    w: &[f64],
    budget: f64,
    x0: Vec<f64>,
    options: &SolverOptions,
    start: usize,
) -> Result<RelaxedSolution> {
    const ARMIJO: f64 = 1e-4;
    let mut x = x0;
    let mut f = obj.value(&x);
    if !f.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let start_value = f;
    let mut g = obj.gradient(&x);
    let mut pg = norm(&projected_step(&x, &g, 1.0, w, budget));
    let gmax = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut alpha = if gmax > 0.0 {
        (1.0 / gmax).clamp(1e-10, 1e10)
    } else {
        1.0
    };
    let mut iterations = 0;
    let mut converged = pg < options.gtol;
    while !converged && iterations < options.max_iter {
        iterations += 1;
        let d = projected_step(&x, &g, alpha, w, budget);
        let slope = dot(&g, &d);
        if slope <= 0.0 {
            break;
        }
        let mut step = 1.0;
        let (x_new, f_new) = loop {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fc = obj.value(&cand);
            if !fc.is_finite() {
                return Err(Error::NonFinite(cand));
            }
            if fc >= f + ARMIJO * step * slope {
                break (Some(cand), fc);
            }
            step *= 0.5;
            if step < 1e-20 {
                break (None, f);
            }
        };
        let Some(x_new) = x_new else { break };
        let g_new = obj.gradient(&x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        // curvature of −f along s
        let sty = -dot(&s, &y);
        alpha = if sty > 0.0 {
            (dot(&s, &s) / sty).clamp(1e-10, 1e10)
        } else {
            1e10
        };
        x = x_new;
        f = f_new;
        g = g_new;
        pg = norm(&projected_step(&x, &g, 1.0, w, budget));
        converged = pg < options.gtol;
    }
    let load: f64 = dot(&x, w);
    let active = ActiveConstraints {
        at_lower: x.iter().filter(|&&v| v <= 1e-12).count(),
        at_upper: x.iter().filter(|&&v| v >= 1.0 - 1e-12).count(),
        budget: load >= budget - 1e-9 * budget.max(1.0),
    };
    Ok(RelaxedSolution {
        x,
        value: f,
        start_value,
        iterations,
        projected_gradient: pg,
        converged,
        active,
        start,
    })
}

/// Maximizes `obj` over `{x ∈ [0,1]^v : wᵀx ≤ budget}` from several starts
/// and returns the best (ties to the lowest start index).
///
/// Start 0 is `x0` if given, else `x_j = budget / Σw`; the remaining starts
/// are random feasible points drawn from `options.seed`.
pub fn solve_relaxed<O: SmoothObjective + Sync + ?Sized>(
    obj: &O,
    weights: &[f64],
    budget: f64,
    x0: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<RelaxedSolution> {
    let v = obj.dim();
    if weights.len() != v {
        return Err(Error::Dimension {
            what: "weights",
            got: weights.len(),
            expected: v,
        });
    }
    if v == 0 {
        return Err(Error::Infeasible("no classes".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(budget >= 0.0) || budget > total {
        return Err(Error::Infeasible(format!(
            "budget {budget} with total weight {total}"
        )));
    }
    let first = match x0 {
        Some(x) if x.len() != v => {
            return Err(Error::Dimension {
                what: "x0",
                got: x.len(),
                expected: v,
            })
        }
        Some(x) if !is_feasible(x, weights, budget) => {
            return Err(Error::Infeasible(format!("x0 = {x:?}")));
        }
        Some(x) => x.to_vec(),
        None => vec![budget / total; v],
    };
    let mut starts = vec![first];
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 1..options.restarts.max(1) {
        let u: Vec<f64> = (0..v).map(|_| rng.random::<f64>()).collect();
        let target = budget * rng.random_range(0.2..=1.0);
        let load = dot(&u, weights);
        let scale = if load > 0.0 {
            (target / load).min(1.0)
        } else {
            0.0
        };
        starts.push(u.iter().map(|a| (a * scale).min(1.0)).collect());
    }
    let results: Vec<Result<RelaxedSolution>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(idx, x)| ascend(obj, weights, budget, x, options, idx))
        .collect();
    let mut best: Option<RelaxedSolution> = None;
    for r in results {
        let sol = r?;
        if best.as_ref().is_none_or(|b| sol.value > b.value) {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one start"))
}

/// `y_j = ⌊w_j x_j⌋`, then one seed at a time to the class with the largest
/// remaining fraction `w_j x_j − y_j` (ties to the lowest index) until
/// `Σy = M`. Never exceeds `w_j`.
pub fn round_allocation(x: &[f64], weights: &[usize], budget: usize) -> Result<Vec<usize>> {
    let n: usize = weights.iter().sum();
    if budget > n {
        return Err(Error::BudgetTooLarge {
            budget,
            available: n,
        });
    }
    if x.len() != weights.len() {
        return Err(Error::Dimension {
            what: "x",
            got: x.len(),
            expected: weights.len(),
        });
    }
    let scaled: Vec<f64> = x
        .iter()
        .zip(weights)
        .map(|(xi, &w)| xi.max(0.0) * w as f64)
        .collect();
    let mut y: Vec<usize> = scaled
        .iter()
        .zip(weights)
        .map(|(s, &w)| ((s + 1e-9).floor() as usize).min(w))
        .collect();
    while y.iter().sum::<usize>() > budget {
        // only reachable for slightly infeasible x: drop from the smallest remainder
        let j = (0..y.len())
            .filter(|&j| y[j] > 0)
            .min_by(|&a, &b| (scaled[a] - y[a] as f64).total_cmp(&(scaled[b] - y[b] as f64)))
            .expect("positive count");
        y[j] -= 1;
    }
    while y.iter().sum::<usize>() < budget {
        let j = (0..y.len())
            .filter(|&j| y[j] < weights[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if scaled[b] - y[b] as f64 >= scaled[j] - y[j] as f64 => Some(b),
                _ => Some(j),
            })
            .expect("budget <= n leaves room");
        y[j] += 1;
    }
    Ok(y)
}

/// Picks `counts[g]` nodes uniformly at random from each group.
pub fn expand_groups<R: Rng + ?Sized>(
    counts: &[usize],
    groups: &[&[usize]],
    n: usize,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let mut s = vec![false; n];
    for (g, (&count, members)) in counts.iter().zip(groups).enumerate() {
        if count > members.len() {
            return Err(Error::Infeasible(format!(
                "{count} seeds requested for group {g} of size {}",
                members.len()
            )));
        }
        for idx in sample(rng, members.len(), count).into_vec() {
            s[members[idx]] = true;
        }
    }
    Ok(s)
}

/// Marks `y_j` uniformly chosen members of each class as seeds.
pub fn expand_seeds<R: Rng + ?Sized>(
    y: &[usize],
    classes: &UniqueClasses,
    rng: &mut R,
) -> Result<Vec<bool>> {
    if y.len() != classes.len() {
        return Err(Error::Dimension {
            what: "y",
            got: y.len(),
            expected: classes.len(),
        });
    }
    let groups: Vec<&[usize]> = (0..classes.len()).map(|j| classes.members(j)).collect();
    expand_groups(y, &groups, classes.n(), rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Proposed,
    Equal,
    Proportional,
    Largest,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Proposed,
        Strategy::Equal,
        Strategy::Proportional,
        Strategy::Largest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::Equal => "equal",
            Strategy::Proportional => "proportional",
            Strategy::Largest => "largest",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Community indices by decreasing size, ties to the lowest index.
fn by_size_desc(sizes: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    order
}

/// Per-community seed counts for a baseline strategy. Counts that would
/// exceed a community's size spill over to the next largest community.
pub fn baseline_allocation(
    strategy: Strategy,
    sizes: &[usize],
    budget: usize,
) -> Result<Vec<usize>> {
    let n: usize = sizes.iter().sum();
    if budget > n {
        return Err(Error::BudgetTooLarge {
            budget,
            available: n,
        });
    }
    let k = sizes.len();
    let order = by_size_desc(sizes);
    let mut y = match strategy {
        Strategy::Proposed => {
            return Err(Error::Config(
                "the proposed allocation comes from the optimizer".into(),
            ));
        }
        Strategy::Equal => {
            let mut y = vec![budget / k; k];
            for &c in order.iter().take(budget % k) {
                y[c] += 1;
            }
            y
        }
        Strategy::Proportional => {
            let weights: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
            largest_remainder(&weights, budget)
        }
        Strategy::Largest => {
            let mut y = vec![0; k];
            y[order[0]] = budget;
            y
        }
    };
    let mut excess = 0;
    for c in 0..k {
        if y[c] > sizes[c] {
            excess += y[c] - sizes[c];
            y[c] = sizes[c];
        }
    }
    for &c in &order {
        let room = (sizes[c] - y[c]).min(excess);
        y[c] += room;
        excess -= room;
    }
    Ok(y)
}

/// Result of optimizing and rounding the proposed allocation.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub solution: RelaxedSolution,
    /// Seeds per class.
    pub y: Vec<usize>,
    /// Objective at the rounded allocation `x_j = y_j / w_j`.
    pub rounded: ObjectiveEval,
}

/// Solves the relaxation for `f̃`, rounds, and evaluates the rounded point.
pub fn propose_allocation(
    op: &SpreadOperator,
    labels: &CommunityLabels,
    pi: &[f64],
    classes: &UniqueClasses,
    config: ObjectiveConfig,
    options: &SolverOptions,
) -> Result<Proposal> {
    let obj = ApproxObjective::new(op, labels, pi, classes, config)?;
    let weights = classes.weights();
    let solution = solve_relaxed(
        &obj,
        &classes.weights_f64(),
        config.budget as f64,
        None,
        options,
    )?;
    let y = round_allocation(&solution.x, &weights, config.budget)?;
    let xr: Vec<f64> = y
        .iter()
        .zip(&weights)
        .map(|(&a, &w)| a as f64 / w as f64)
        .collect();
    let rounded = obj.evaluate(&xr);
    Ok(Proposal {
        solution,
        y,
        rounded,
    })
}
