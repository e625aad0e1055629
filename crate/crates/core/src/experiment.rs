//! Replicated allocate → spread → summarize runs driven by a TOML config.
//!
//! Allocations are computed once per sweep point (on a reference realization
//! for synthetic models, on plug-in estimates for observed networks) and then
//! evaluated by Monte Carlo over `replications` independent cascades.
//! Synthetic runs draw a fresh network per replication; observed runs keep
//! the network fixed. Replication `r` sees the same network at every sweep
//! point and for every strategy.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{best_permutation_agreement, detect_communities, estimate_params};
use crate::graph::{extract_lcc, Network};
use crate::io::{keep_largest_communities, read_edge_list, seed_budget, BudgetRule};
use crate::model::{generate_network, CommunityLabels, DcsbmParams, ModelSpec};
use crate::objective::{ApproxObjective, ObjectiveConfig, ObjectiveEval};
use crate::optimizer::{
    baseline_allocation, collapse_classes, expand_groups, expand_seeds, round_allocation,
    solve_relaxed, SolverOptions, Strategy, UniqueClasses,
};
use crate::spread::{
    build_psi_with, coverage, simulate_ic, spread_coverage, PsiForm, PsiOptions, TransmissionSpec,
};

/// Class-merging tolerance on `θ̂` for observed networks.
pub const OBSERVED_THETA_TOL: f64 = 1e-3;

const RECIPES: [(&str, &str); 7] = [
    ("sbm1", include_str!("../recipes/sbm1.toml")),
    ("sbm2", include_str!("../recipes/sbm2.toml")),
    ("sbm3", include_str!("../recipes/sbm3.toml")),
    ("sbm1-lambda", include_str!("../recipes/sbm1-lambda.toml")),
    ("dcsbm-time", include_str!("../recipes/dcsbm-time.toml")),
    ("polblogs", include_str!("../recipes/polblogs.toml")),
    ("deputies", include_str!("../recipes/deputies.toml")),
];

pub fn recipe_names() -> impl Iterator<Item = &'static str> {
    RECIPES.iter().map(|(name, _)| *name)
}

/// Source text of a built-in recipe.
pub fn recipe_source(name: &str) -> Option<&'static str> {
    RECIPES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| *src)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// `budget = 30` or `budget = "sqrt"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetSpec {
    Count(usize),
    Rule(String),
}

impl BudgetSpec {
    pub fn rule(&self) -> Result<BudgetRule> {
        match self {
            BudgetSpec::Count(m) => Ok(BudgetRule::Explicit(*m)),
            BudgetSpec::Rule(s) => s.parse(),
        }
    }
}

/// `beta = 0.2`, `beta = [0.1, 0.2]`, or a `[beta]` table with `within`
/// and `between` lists crossed into a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Uniform(OneOrMany<f64>),
    Grid { within: Vec<f64>, between: Vec<f64> },
}

impl BetaSpec {
    /// `(within, between)` pairs in sweep order.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        match self {
            BetaSpec::Uniform(v) => v.to_vec().into_iter().map(|b| (b, b)).collect(),
            BetaSpec::Grid { within, between } => within
                .iter()
                .flat_map(|&w| between.iter().map(move |&b| (w, b)))
                .collect(),
        }
    }
}

/// An observed network on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSource {
    pub edges: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    /// Number of communities; defaults to the number of label values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Estimate communities by spectral clustering even when labels exist.
    #[serde(default)]
    pub detect: bool,
    #[serde(default = "yes")]
    pub lcc: bool,
    /// Keep only nodes in this many largest labeled communities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_largest: Option<usize>,
}

fn yes() -> bool {
    true
}

fn default_replications() -> usize {
    50
}

fn default_t() -> OneOrMany<usize> {
    OneOrMany::One(1)
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_t")]
    pub t: OneOrMany<usize>,
    pub lambda: OneOrMany<f64>,
    pub budget: BudgetSpec,
    pub beta: BetaSpec,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    /// Tolerance for merging degree parameters into one class. Synthetic
    /// models default to exact matching, observed networks to
    /// [`OBSERVED_THETA_TOL`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSource>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative network paths resolve against the
    /// file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let mut config = Self::from_toml(&fs::read_to_string(path)?)?;
        if let (Some(net), Some(dir)) = (config.network.as_mut(), path.parent()) {
            net.edges = dir.join(&net.edges);
            net.labels = net.labels.as_ref().map(|l| dir.join(l));
        }
        Ok(config)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let src = recipe_source(name).ok_or_else(|| {
            let known: Vec<&str> = recipe_names().collect();
            Error::Config(format!(
                "unknown recipe {name:?}; known: {}",
                known.join(", ")
            ))
        })?;
        Self::from_toml(src)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.t.to_vec().is_empty()
            || self.lambda.to_vec().is_empty()
            || self.beta.pairs().is_empty()
        {
            return fail("sweep lists must be nonempty".into());
        }
        if self.strategies.is_empty() {
            return fail("no strategies given".into());
        }
        if let Some(l) = self.lambda.to_vec().into_iter().find(|l| !(*l >= 0.0)) {
            return fail(format!("lambda {l} must be nonnegative"));
        }
        if let Some((w, b)) = self
            .beta
            .pairs()
            .into_iter()
            .find(|(w, b)| !(0.0..=1.0).contains(w) || !(0.0..=1.0).contains(b))
        {
            return fail(format!("beta ({w}, {b}) outside [0, 1]"));
        }
        if let Some(tol) = self.theta_tol {
            if !(tol >= 0.0) {
                return fail(format!("theta_tol {tol} must be nonnegative"));
            }
        }
        self.budget.rule()?;
        match (&self.model, &self.network) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => fail("exactly one of [model] and [network] is required".into()),
        }
    }

    /// Sweep points in output order: `t`, then `λ`, then `β` pairs.
    pub fn sweep(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for t in self.t.to_vec() {
            for lambda in self.lambda.to_vec() {
                for (beta_within, beta_between) in self.beta.pairs() {
                    out.push(SweepPoint {
                        t,
                        lambda,
                        beta_within,
                        beta_between,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub t: usize,
    pub lambda: f64,
    pub beta_within: f64,
    pub beta_between: f64,
}

impl SweepPoint {
    pub fn transmission(&self, k: usize) -> TransmissionSpec {
        if self.beta_within == self.beta_between {
            TransmissionSpec::Scalar(self.beta_within)
        } else {
            TransmissionSpec::within_between(k, self.beta_within, self.beta_between)
        }
    }
}

/// Allocation chosen for one strategy at one sweep point.
#[derive(Debug, Clone)]
pub struct Plan {
    pub sweep: usize,
    pub strategy: Strategy,
    /// Seeds per community.
    pub seeds: Vec<usize>,
    /// Seeds per class (proposed strategy only).
    pub class_seeds: Option<Vec<usize>>,
    /// Approximate objective at the allocation.
    pub predicted: ObjectiveEval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub replication: usize,
    pub strategy: Strategy,
    pub lambda: f64,
    pub beta_within: f64,
    pub beta_between: f64,
    pub t: usize,
    pub seeds: Vec<usize>,
    pub q: Vec<f64>,
    pub entropy: f64,
    pub coverage: f64,
    /// Coverage by nodes the cascade reached, seeds excluded.
    pub spread_q: Vec<f64>,
    pub spread_entropy: f64,
    pub spread_coverage: f64,
    pub pred_q: Vec<f64>,
    pub pred_entropy: f64,
    pub pred_coverage: f64,
}

/// Mean and sample standard deviation of the replications of one
/// (sweep point, strategy) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub strategy: Strategy,
    pub lambda: f64,
    pub beta_within: f64,
    pub beta_between: f64,
    pub t: usize,
    pub replications: usize,
    pub seeds: Vec<usize>,
    pub q_mean: Vec<f64>,
    pub q_sd: Vec<f64>,
    pub entropy_mean: f64,
    pub entropy_sd: f64,
    pub coverage_mean: f64,
    pub coverage_sd: f64,
    pub spread_q_mean: Vec<f64>,
    pub spread_entropy_mean: f64,
    pub spread_entropy_sd: f64,
    pub spread_coverage_mean: f64,
    pub spread_coverage_sd: f64,
    pub pred_q: Vec<f64>,
    pub pred_entropy: f64,
    pub pred_coverage: f64,
}

/// Facts about an observed network run.
#[derive(Debug, Clone)]
pub struct ObservedSummary {
    pub n: usize,
    pub edges: usize,
    pub params: DcsbmParams,
    pub labels: CommunityLabels,
    /// Best-permutation agreement of the working labels with the file's
    /// labels, when communities were detected and labels were given.
    pub agreement: Option<f64>,
    pub truth: Option<CommunityLabels>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub id: String,
    pub n: usize,
    pub k: usize,
    pub budget: usize,
    pub classes: usize,
    pub plans: Vec<Plan>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub observed: Option<ObservedSummary>,
    /// Resolved configuration, as written to `config.echo`.
    pub echo: String,
}

/// Independent RNG stream keyed by the base seed and a path of indices.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let key = path
        .iter()
        .fold(splitmix(seed), |h, &p| splitmix(h ^ splitmix(p)));
    ChaCha8Rng::seed_from_u64(key)
}

const TAG_REFERENCE: u64 = 1;
const TAG_NETWORK: u64 = 2;
const TAG_SPREAD: u64 = 3;
const TAG_DETECT: u64 = 4;

/// One replication's network for a synthetic model.
struct World {
    network: Network,
    labels: CommunityLabels,
    theta_raw: Vec<f64>,
}

enum Setting {
    Synthetic {
        spec: ModelSpec,
        /// Raw degree parameter shared by each reference class.
        class_theta_raw: Vec<f64>,
    },
    Observed {
        network: Network,
    },
}

/// Everything the planner needs, fixed across sweep points.
struct Planner {
    params: DcsbmParams,
    labels: CommunityLabels,
    classes: UniqueClasses,
    clamp: bool,
    budget: usize,
}

impl Planner {
    fn plan(
        &self,
        idx: usize,
        point: &SweepPoint,
        strategies: &[Strategy],
        solver: &SolverOptions,
    ) -> Result<Vec<Plan>> {
        let k = self.labels.k();
        let op = build_psi_with(
            &self.params,
            &self.labels,
            &point.transmission(k),
            PsiOptions {
                form: PsiForm::Auto,
                clamp: self.clamp,
            },
        )?;
        let config = ObjectiveConfig::new(point.lambda, point.t, self.budget);
        let obj = ApproxObjective::new(&op, &self.labels, &self.params.pi, &self.classes, config)?;
        let sizes = self.labels.sizes();
        strategies
            .iter()
            .map(|&strategy| {
                let (seeds, class_seeds, x) = if strategy == Strategy::Proposed {
                    let weights = self.classes.weights();
                    let sol = solve_relaxed(
                        &obj,
                        &self.classes.weights_f64(),
                        self.budget as f64,
                        None,
                        solver,
                    )?;
                    let y = round_allocation(&sol.x, &weights, self.budget)?;
                    let x: Vec<f64> = y
                        .iter()
                        .zip(&weights)
                        .map(|(&a, &w)| a as f64 / w as f64)
                        .collect();
                    (self.classes.community_totals(&y, k), Some(y), x)
                } else {
                    let y = baseline_allocation(strategy, &sizes, self.budget)?;
                    let x = self
                        .classes
                        .communities()
                        .iter()
                        .map(|&c| y[c] as f64 / sizes[c] as f64)
                        .collect();
                    (y, None, x)
                };
                Ok(Plan {
                    sweep: idx,
                    strategy,
                    seeds,
                    class_seeds,
                    predicted: obj.evaluate(&x),
                })
            })
            .collect()
    }
}

fn observed_setting(
    config: &ExperimentConfig,
    source: &NetworkSource,
) -> Result<(Setting, Planner, ObservedSummary)> {
    let mut net = read_edge_list(&source.edges, source.labels.as_deref())?;
    if let Some(count) = source.keep_largest {
        net = keep_largest_communities(&net, count)?;
    }
    if source.lcc {
        net = extract_lcc(&net).0;
    }
    let truth = net.labels().cloned();
    let k = source
        .k
        .or(truth.as_ref().map(CommunityLabels::k))
        .ok_or_else(|| Error::Config("observed network needs `k` or a label file".into()))?;
    let working = match (&truth, source.detect) {
        (Some(t), false) => t.clone(),
        _ => detect_communities(&net, k, &mut stream(config.seed, &[TAG_DETECT]))?,
    };
    let agreement = match (&truth, source.detect) {
        (Some(t), true) if t.k() == working.k() => Some(best_permutation_agreement(&working, t)),
        _ => None,
    };
    let est = estimate_params(&net, &working)?;
    let tol = config.theta_tol.unwrap_or(OBSERVED_THETA_TOL);
    let classes = collapse_classes(&est.params, &working, tol);
    let budget = seed_budget(net.n(), config.budget.rule()?)?;
    net.set_labels(working.clone())?;
    let summary = ObservedSummary {
        n: net.n(),
        edges: net.edge_count(),
        params: est.params.clone(),
        labels: working.clone(),
        agreement,
        truth,
        warnings: est.warnings,
    };
    let planner = Planner {
        params: est.params,
        labels: working,
        classes,
        clamp: true,
        budget,
    };
    Ok((Setting::Observed { network: net }, planner, summary))
}

fn synthetic_setting(config: &ExperimentConfig, spec: &ModelSpec) -> Result<(Setting, Planner)> {
    let reference = spec.realize(&mut stream(config.seed, &[TAG_REFERENCE]))?;
    let classes = collapse_classes(
        &reference.params,
        &reference.labels,
        config.theta_tol.unwrap_or(0.0),
    );
    let class_theta_raw = (0..classes.len())
        .map(|j| {
            let m = classes.members(j);
            m.iter().map(|&i| reference.theta_raw[i]).sum::<f64>() / m.len() as f64
        })
        .collect();
    let budget = seed_budget(spec.n, config.budget.rule()?)?;
    let planner = Planner {
        params: reference.params,
        labels: reference.labels,
        classes,
        clamp: false,
        budget,
    };
    Ok((
        Setting::Synthetic {
            spec: spec.clone(),
            class_theta_raw,
        },
        planner,
    ))
}

/// Places a reference-class allocation on a replication's nodes: exact
/// matches on (community, raw θ) first, then the unused nodes of the same
/// community with the nearest raw θ, then any unused node.
fn place_by_class<R: Rng + ?Sized>(
    world: &World,
    communities: &[usize],
    targets: &[Option<f64>],
    counts: &[usize],
    rng: &mut R,
) -> Vec<bool> {
    let n = world.labels.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut seeds = vec![false; n];
    let mut short: Vec<usize> = counts.to_vec();
    let exact = |i: usize, j: usize| {
        world.labels.of(i) == communities[j] && targets[j].is_none_or(|th| world.theta_raw[i] == th)
    };
    for j in 0..counts.len() {
        for &i in &order {
            if short[j] == 0 {
                break;
            }
            if !seeds[i] && exact(i, j) {
                seeds[i] = true;
                short[j] -= 1;
            }
        }
    }
    for j in 0..counts.len() {
        if short[j] == 0 {
            continue;
        }
        let mut pool: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| !seeds[i] && world.labels.of(i) == communities[j])
            .collect();
        if let Some(th) = targets[j] {
            pool.sort_by(|&a, &b| {
                (world.theta_raw[a] - th)
                    .abs()
                    .total_cmp(&(world.theta_raw[b] - th).abs())
            });
        }
        for i in pool.into_iter().take(short[j]) {
            seeds[i] = true;
            short[j] -= 1;
        }
    }
    let mut rest = short.iter().sum::<usize>();
    for &i in &order {
        if rest == 0 {
            break;
        }
        if !seeds[i] {
            seeds[i] = true;
            rest -= 1;
        }
    }
    seeds
}

fn seeds_for<R: Rng + ?Sized>(
    plan: &Plan,
    planner: &Planner,
    setting: &Setting,
    world: Option<&World>,
    rng: &mut R,
) -> Result<Vec<bool>> {
    match (setting, world) {
        (Setting::Observed { .. }, _) => match &plan.class_seeds {
            Some(y) => expand_seeds(y, &planner.classes, rng),
            None => {
                let members = planner.labels.members();
                let groups: Vec<&[usize]> = members.iter().map(Vec::as_slice).collect();
                expand_groups(&plan.seeds, &groups, planner.labels.n(), rng)
            }
        },
        (
            Setting::Synthetic {
                class_theta_raw, ..
            },
            Some(world),
        ) => Ok(match &plan.class_seeds {
            Some(y) => {
                let targets: Vec<Option<f64>> = class_theta_raw.iter().map(|&t| Some(t)).collect();
                place_by_class(world, planner.classes.communities(), &targets, y, rng)
            }
            None => {
                let k = plan.seeds.len();
                place_by_class(
                    world,
                    &(0..k).collect::<Vec<_>>(),
                    &vec![None; k],
                    &plan.seeds,
                    rng,
                )
            }
        }),
        (Setting::Synthetic { .. }, None) => unreachable!("synthetic replications carry a world"),
    }
}

fn strategy_index(s: Strategy) -> u64 {
    Strategy::ALL.iter().position(|&x| x == s).expect("listed") as u64
}

/// Runs every sweep point, strategy and replication of `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_inner(config).map_err(|e| Error::Experiment {
        id: config.id.clone(),
        source: Box::new(e),
    })
}

/// Allocations for every sweep point, without simulation.
#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub sweep: Vec<SweepPoint>,
    /// Grouped by sweep point, strategies in config order.
    pub plans: Vec<Plan>,
    pub n: usize,
    pub k: usize,
    pub budget: usize,
    pub classes: usize,
    pub observed: Option<ObservedSummary>,
}

pub fn plan_experiment(config: &ExperimentConfig) -> Result<PlanOutput> {
    let wrap = |e| Error::Experiment {
        id: config.id.clone(),
        source: Box::new(e),
    };
    let (_, planner, observed) = prepare(config).map_err(wrap)?;
    let sweep = config.sweep();
    let plans = plan_all(config, &planner, &sweep).map_err(wrap)?;
    Ok(PlanOutput {
        n: planner.labels.n(),
        k: planner.labels.k(),
        budget: planner.budget,
        classes: planner.classes.len(),
        sweep,
        plans: plans.into_iter().flatten().collect(),
        observed,
    })
}

fn prepare(config: &ExperimentConfig) -> Result<(Setting, Planner, Option<ObservedSummary>)> {
    config.validate()?;
    match (&config.model, &config.network) {
        (Some(spec), None) => {
            let (s, p) = synthetic_setting(config, spec)?;
            Ok((s, p, None))
        }
        (None, Some(src)) => {
            let (s, p, o) = observed_setting(config, src)?;
            Ok((s, p, Some(o)))
        }
        _ => unreachable!("validated"),
    }
}

fn plan_all(
    config: &ExperimentConfig,
    planner: &Planner,
    sweep: &[SweepPoint],
) -> Result<Vec<Vec<Plan>>> {
    sweep
        .par_iter()
        .enumerate()
        .map(|(idx, point)| planner.plan(idx, point, &config.strategies, &config.solver))
        .collect()
}

fn run_inner(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (setting, planner, observed) = prepare(config)?;
    let sweep = config.sweep();
    let k = planner.labels.k();
    let n = planner.labels.n();
    let plans = plan_all(config, &planner, &sweep)?;

    let worlds: Vec<World> = match &setting {
        Setting::Synthetic { spec, .. } => (0..config.replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(config.seed, &[TAG_NETWORK, r as u64]);
                let real = spec.realize(&mut rng)?;
                let network = generate_network(&real.params, &real.labels, &mut rng)?;
                Ok(World {
                    network,
                    labels: real.labels,
                    theta_raw: real.theta_raw,
                })
            })
            .collect::<Result<_>>()?,
        Setting::Observed { .. } => Vec::new(),
    };

    let jobs: Vec<(usize, usize)> = (0..sweep.len())
        .flat_map(|s| (0..config.replications).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let point = &sweep[s];
            let world = worlds.get(r);
            let (network, labels) = match (&setting, world) {
                (Setting::Observed { network }, _) => (network, &planner.labels),
                (_, Some(w)) => (&w.network, &w.labels),
                _ => unreachable!(),
            };
            let tspec = point.transmission(k);
            plans[s]
                .iter()
                .map(|plan| {
                    let mut rng = stream(
                        config.seed,
                        &[
                            TAG_SPREAD,
                            s as u64,
                            r as u64,
                            strategy_index(plan.strategy),
                        ],
                    );
                    let seeds = seeds_for(plan, &planner, &setting, world, &mut rng)?;
                    let trace = simulate_ic(network, &tspec, &seeds, point.t, &mut rng)?;
                    let cov = coverage(&trace, labels, point.t)?;
                    let reached = spread_coverage(&trace, labels, point.t)?;
                    let mut placed = vec![0; k];
                    for (i, _) in seeds.iter().enumerate().filter(|(_, &s)| s) {
                        placed[labels.of(i)] += 1;
                    }
                    Ok(ResultRow {
                        experiment: config.id.clone(),
                        replication: r,
                        strategy: plan.strategy,
                        lambda: point.lambda,
                        beta_within: point.beta_within,
                        beta_between: point.beta_between,
                        t: point.t,
                        seeds: placed,
                        q: cov.q,
                        entropy: cov.entropy,
                        coverage: cov.m,
                        spread_q: reached.q,
                        spread_entropy: reached.entropy,
                        spread_coverage: reached.m,
                        pred_q: plan.predicted.q.clone(),
                        pred_entropy: plan.predicted.entropy,
                        pred_coverage: plan.predicted.coverage,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    // reorder to sweep point, strategy, replication
    let per_sweep = config.strategies.len();
    let mut rows = Vec::with_capacity(outcomes.len() * per_sweep);
    for s in 0..sweep.len() {
        for st in 0..per_sweep {
            for r in 0..config.replications {
                rows.push(outcomes[s * config.replications + r][st].clone());
            }
        }
    }
    let plans: Vec<Plan> = plans.into_iter().flatten().collect();
    let summary = summarize(&rows, &plans);
    let echo = echo(config, &planner, n)?;
    Ok(ExperimentOutput {
        id: config.id.clone(),
        n,
        k,
        budget: planner.budget,
        classes: planner.classes.len(),
        plans,
        rows,
        summary,
        observed,
        echo,
    })
}

fn echo(config: &ExperimentConfig, planner: &Planner, n: usize) -> Result<String> {
    let mut text = config.to_toml()?;
    let tol = config.theta_tol.unwrap_or(if planner.clamp {
        OBSERVED_THETA_TOL
    } else {
        0.0
    });
    writeln!(text, "\n[resolved]").expect("string write");
    writeln!(text, "n = {n}").expect("string write");
    writeln!(text, "k = {}", planner.labels.k()).expect("string write");
    writeln!(text, "budget = {}", planner.budget).expect("string write");
    writeln!(text, "classes = {}", planner.classes.len()).expect("string write");
    writeln!(text, "theta_tol = {tol:?}").expect("string write");
    Ok(text)
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    (mean, var.sqrt())
}

/// Rows must be grouped by (sweep point, strategy) as produced by
/// [`run_experiment`], with equally many replications per group; `plans`
/// lists those groups in the same order.
pub fn summarize(rows: &[ResultRow], plans: &[Plan]) -> Vec<SummaryRow> {
    if plans.is_empty() || rows.is_empty() {
        return Vec::new();
    }
    let per = rows.len() / plans.len();
    let mut out = Vec::with_capacity(plans.len());
    for (plan, group) in plans.iter().zip(rows.chunks(per.max(1))) {
        let first = &group[0];
        let k = first.q.len();
        let (entropy_mean, entropy_sd) = mean_sd(group.iter().map(|r| r.entropy));
        let (coverage_mean, coverage_sd) = mean_sd(group.iter().map(|r| r.coverage));
        let (q_mean, q_sd) = (0..k)
            .map(|c| mean_sd(group.iter().map(move |r| r.q[c])))
            .unzip();
        let (spread_entropy_mean, spread_entropy_sd) =
            mean_sd(group.iter().map(|r| r.spread_entropy));
        let (spread_coverage_mean, spread_coverage_sd) =
            mean_sd(group.iter().map(|r| r.spread_coverage));
        let spread_q_mean = (0..k)
            .map(|c| mean_sd(group.iter().map(move |r| r.spread_q[c])).0)
            .collect();
        out.push(SummaryRow {
            experiment: first.experiment.clone(),
            strategy: plan.strategy,
            lambda: first.lambda,
            beta_within: first.beta_within,
            beta_between: first.beta_between,
            t: first.t,
            replications: group.len(),
            seeds: plan.seeds.clone(),
            q_mean,
            q_sd,
            entropy_mean,
            entropy_sd,
            coverage_mean,
            coverage_sd,
            spread_q_mean,
            spread_entropy_mean,
            spread_entropy_sd,
            spread_coverage_mean,
            spread_coverage_sd,
            pred_q: plan.predicted.q.clone(),
            pred_entropy: plan.predicted.entropy,
            pred_coverage: plan.predicted.coverage,
        });
    }
    out
}

fn numbered(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (1..=k).map(move |c| format!("{prefix}_{c}"))
}

fn fmt_all<T: ToString>(v: &[T]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(ToString::to_string)
}

/// `results.csv` contents: one line per row with a fixed header.
pub fn results_csv(rows: &[ResultRow], k: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "experiment",
        "replication",
        "strategy",
        "lambda",
        "beta_within",
        "beta_between",
        "t",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(numbered("seeds", k));
    header.extend(numbered("q", k));
    header.extend(["entropy".into(), "coverage".into()]);
    header.extend(numbered("spread_q", k));
    header.extend(["spread_entropy".into(), "spread_coverage".into()]);
    header.extend(numbered("pred_q", k));
    header.extend(["pred_entropy".into(), "pred_coverage".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.experiment.clone(),
            r.replication.to_string(),
            r.strategy.name().to_string(),
            r.lambda.to_string(),
            r.beta_within.to_string(),
            r.beta_between.to_string(),
            r.t.to_string(),
        ];
        rec.extend(fmt_all(&r.seeds));
        rec.extend(fmt_all(&r.q));
        rec.extend([r.entropy.to_string(), r.coverage.to_string()]);
        rec.extend(fmt_all(&r.spread_q));
        rec.extend([r.spread_entropy.to_string(), r.spread_coverage.to_string()]);
        rec.extend(fmt_all(&r.pred_q));
        rec.extend([r.pred_entropy.to_string(), r.pred_coverage.to_string()]);
        w.write_record(&rec)?;
    }
    finish(w)
}

/// `summary.csv` contents.
pub fn summary_csv(rows: &[SummaryRow], k: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "experiment",
        "strategy",
        "lambda",
        "beta_within",
        "beta_between",
        "t",
        "replications",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(numbered("seeds", k));
    header.extend(numbered("q_mean", k));
    header.extend(numbered("q_sd", k));
    header.extend(["entropy_mean", "entropy_sd", "coverage_mean", "coverage_sd"].map(String::from));
    header.extend(numbered("spread_q_mean", k));
    header.extend(
        [
            "spread_entropy_mean",
            "spread_entropy_sd",
            "spread_coverage_mean",
            "spread_coverage_sd",
        ]
        .map(String::from),
    );
    header.extend(numbered("pred_q", k));
    header.extend(["pred_entropy".into(), "pred_coverage".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.experiment.clone(),
            r.strategy.name().to_string(),
            r.lambda.to_string(),
            r.beta_within.to_string(),
            r.beta_between.to_string(),
            r.t.to_string(),
            r.replications.to_string(),
        ];
        rec.extend(fmt_all(&r.seeds));
        rec.extend(fmt_all(&r.q_mean));
        rec.extend(fmt_all(&r.q_sd));
        rec.extend(
            [r.entropy_mean, r.entropy_sd, r.coverage_mean, r.coverage_sd].map(|v| v.to_string()),
        );
        rec.extend(fmt_all(&r.spread_q_mean));
        rec.extend(
            [
                r.spread_entropy_mean,
                r.spread_entropy_sd,
                r.spread_coverage_mean,
                r.spread_coverage_sd,
            ]
            .map(|v| v.to_string()),
        );
        rec.extend(fmt_all(&r.pred_q));
        rec.extend([r.pred_entropy.to_string(), r.pred_coverage.to_string()]);
        w.write_record(&rec)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes `results.csv`, `summary.csv` and `config.echo` into `dir`.
pub fn write_results(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("results.csv"),
        results_csv(&output.rows, output.k)?,
    )?;
    fs::write(
        dir.join("summary.csv"),
        summary_csv(&output.summary, output.k)?,
    )?;
    fs::write(dir.join("config.echo"), &output.echo)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(replications: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::builtin("sbm1").unwrap();
        c.replications = replications;
        if let Some(m) = c.model.as_mut() {
            m.n = 200;
        }
        c
    }

    #[test]
    fn every_recipe_parses() {
        for name in recipe_names() {
            let c = ExperimentConfig::builtin(name).unwrap();
            assert_eq!(c.id, name);
            let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
            assert_eq!(again, c);
        }
    }

    #[test]
    fn config_requires_one_source() {
        let mut c = small(1);
        c.network = Some(NetworkSource {
            edges: "x".into(),
            labels: None,
            k: Some(2),
            detect: true,
            lcc: true,
            keep_largest: None,
        });
        assert!(c.validate().is_err());
        c.network = None;
        c.model = None;
        assert!(c.validate().is_err());
        let mut c = small(0);
        assert!(c.validate().is_err());
        c.replications = 1;
        c.lambda = OneOrMany::Many(vec![]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn beta_grid_order() {
        let b = BetaSpec::Grid {
            within: vec![0.1, 0.2],
            between: vec![0.3, 0.4],
        };
        assert_eq!(
            b.pairs(),
            vec![(0.1, 0.3), (0.1, 0.4), (0.2, 0.3), (0.2, 0.4)]
        );
    }

    #[test]
    fn row_layout_and_predictions() {
        let out = run_experiment(&small(3)).unwrap();
        assert_eq!(out.rows.len(), 3 * 4);
        assert_eq!(out.summary.len(), 4);
        for chunk in out.rows.chunks(3) {
            assert!(chunk.iter().all(|r| r.strategy == chunk[0].strategy));
            assert!(chunk
                .iter()
                .all(|r| r.pred_entropy == chunk[0].pred_entropy && r.pred_q == chunk[0].pred_q));
            assert!(chunk.iter().all(|r| r.seeds.iter().sum::<usize>() == 30));
            assert_eq!(
                chunk.iter().map(|r| r.replication).collect::<Vec<_>>(),
                vec![0, 1, 2]
            );
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        let csv = results_csv(&[], 3).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("experiment,replication,strategy"));
        assert!(csv.trim_end().ends_with("pred_entropy,pred_coverage"));
    }

    #[test]
    fn streams_differ_by_path() {
        let a: u64 = stream(1, &[2, 3]).random();
        let b: u64 = stream(1, &[3, 2]).random();
        let c: u64 = stream(1, &[2, 3]).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
