//! Python bindings for `fairspread`.
//!
//! Labels cross the boundary 0-based, matching Python indexing. Randomness
//! is always driven by an explicit integer `seed`.

use std::path::PathBuf;

use fairspread::estimate;
use fairspread::experiment::{self, ExperimentConfig, SummaryRow};
use fairspread::graph::{self, Network as CoreNetwork};
use fairspread::model::{
    self, CommunityLabels, DcsbmParams as CoreParams, LabelMode, ModelSpec, ThetaSpec,
};
use fairspread::objective::{ApproxObjective, ObjectiveConfig, ObjectiveEval};
use fairspread::optimizer::{self, SolverOptions, Strategy, UniqueClasses};
use fairspread::spread::{self, ActivationTrace, TransmissionSpec};
use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: fairspread::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn labels_from(labels: Vec<usize>) -> PyResult<CommunityLabels> {
    let k = labels.iter().max().map_or(1, |m| m + 1);
    CommunityLabels::new(labels, k).map_err(err)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A transmission probability: one scalar, or `(within, between)`.
#[derive(FromPyObject)]
enum Beta {
    Scalar(f64),
    Pair(f64, f64),
}

impl Beta {
    fn spec(&self, k: usize) -> TransmissionSpec {
        match *self {
            Beta::Scalar(b) => TransmissionSpec::Scalar(b),
            Beta::Pair(w, b) => TransmissionSpec::within_between(k, w, b),
        }
    }
}

fn seed_mask(seeds: &[usize], n: usize) -> PyResult<Vec<bool>> {
    let mut mask = vec![false; n];
    for &s in seeds {
        if s >= n {
            return Err(PyValueError::new_err(format!(
                "seed {s} is not a node of a {n}-node network"
            )));
        }
        mask[s] = true;
    }
    Ok(mask)
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err("P must be square"));
    }
    Ok(DMatrix::from_fn(k, k, |a, b| rows[a][b]))
}

fn eval_dict<'py>(py: Python<'py>, e: &ObjectiveEval) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", e.value)?;
    d.set_item("coverage", e.coverage)?;
    d.set_item("entropy", e.entropy)?;
    d.set_item("q", e.q.clone())?;
    d.set_item("p", e.p.clone())?;
    d.set_item("degenerate", e.degenerate)?;
    Ok(d)
}

/// An undirected simple graph, optionally with community labels.
#[pyclass(module = "fairspread", skip_from_py_object)]
#[derive(Clone)]
struct Network {
    inner: CoreNetwork,
}

#[pymethods]
impl Network {
    #[new]
    #[pyo3(signature = (n, edges, labels = None))]
    fn new(n: usize, edges: Vec<(usize, usize)>, labels: Option<Vec<usize>>) -> PyResult<Self> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= n || *b >= n) {
            return Err(PyValueError::new_err(format!(
                "edge ({a}, {b}) outside 0..{n}"
            )));
        }
        let mut inner = CoreNetwork::from_edges(n, edges);
        if let Some(l) = labels {
            inner.set_labels(labels_from(l)?).map_err(err)?;
        }
        Ok(Self { inner })
    }

    /// Reads an edge list and an optional `node,label` file.
    #[staticmethod]
    #[pyo3(signature = (path, labels = None))]
    fn read(path: PathBuf, labels: Option<PathBuf>) -> PyResult<Self> {
        let inner = fairspread::io::read_edge_list(&path, labels.as_deref()).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels().map(|l| l.as_slice().to_vec())
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        (0..self.inner.n())
            .map(|i| self.inner.node_name(i))
            .collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees()
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    /// Largest connected component and the original index of each node.
    fn largest_component(&self) -> (Network, Vec<usize>) {
        let (inner, nodes) = graph::extract_lcc(&self.inner);
        (Network { inner }, nodes)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(n={}, edges={})",
            self.inner.n(),
            self.inner.edge_count()
        )
    }
}

/// Degree-corrected block model parameters `(π, P, θ)`.
#[pyclass(module = "fairspread", skip_from_py_object)]
#[derive(Clone)]
struct DcsbmParams {
    inner: CoreParams,
}

#[pymethods]
impl DcsbmParams {
    #[new]
    fn new(pi: Vec<f64>, p: Vec<Vec<f64>>, theta: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreParams::new(pi, matrix(p)?, theta),
        })
    }

    /// Block model with every `θ_i = 1`.
    #[staticmethod]
    fn sbm(pi: Vec<f64>, p: Vec<Vec<f64>>, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: CoreParams::sbm(pi, matrix(p)?, n),
        })
    }

    #[getter]
    fn pi(&self) -> Vec<f64> {
        self.inner.pi.clone()
    }

    #[getter]
    fn p(&self) -> Vec<Vec<f64>> {
        let p = &self.inner.p;
        (0..p.nrows())
            .map(|a| (0..p.ncols()).map(|b| p[(a, b)]).collect())
            .collect()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta.clone()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    /// Every violated constraint, as messages; empty when valid.
    #[pyo3(signature = (labels = None))]
    fn validate(&self, labels: Option<Vec<usize>>) -> PyResult<Vec<String>> {
        let v = match labels {
            Some(l) => self.inner.validate_with_labels(&labels_from(l)?),
            None => self.inner.validate(),
        };
        Ok(v.iter().map(ToString::to_string).collect())
    }

    fn __repr__(&self) -> String {
        format!("DcsbmParams(n={}, k={})", self.inner.n(), self.inner.k())
    }
}

/// Per-node activation steps from one cascade.
#[pyclass(module = "fairspread")]
struct Cascade {
    inner: ActivationTrace,
}

#[pymethods]
impl Cascade {
    /// Step at which each node activated (`None` if never); seeds are 0.
    #[getter]
    fn activated_at(&self) -> Vec<Option<usize>> {
        self.inner.activated_at.clone()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    /// Per-community activated fractions by step `t` (default: the
    /// horizon). `include_seeds=False` counts only nodes reached by spread.
    #[pyo3(signature = (labels, t = None, include_seeds = true))]
    fn coverage<'py>(
        &self,
        py: Python<'py>,
        labels: Vec<usize>,
        t: Option<usize>,
        include_seeds: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let labels = labels_from(labels)?;
        let t = t.unwrap_or(self.inner.horizon);
        let c = if include_seeds {
            spread::coverage(&self.inner, &labels, t)
        } else {
            spread::spread_coverage(&self.inner, &labels, t)
        }
        .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("q", c.q)?;
        d.set_item("p", c.p)?;
        d.set_item("coverage", c.m)?;
        d.set_item("entropy", c.entropy)?;
        Ok(d)
    }
}

/// Draws labels and degree parameters from a model description.
/// `theta` is `"constant"`, `"poisson(m)"` or a list of raw values.
#[pyfunction]
#[pyo3(signature = (n, pi, p, theta = None, fixed_labels = true, seed = 0))]
fn realize(
    n: usize,
    pi: Vec<f64>,
    p: Vec<Vec<f64>>,
    theta: Option<Bound<'_, PyAny>>,
    fixed_labels: bool,
    seed: u64,
) -> PyResult<(DcsbmParams, Vec<usize>)> {
    let theta = match theta {
        None => ThetaSpec::default(),
        Some(t) => match t.extract::<String>() {
            Ok(name) => ThetaSpec::Named(name),
            Err(_) => ThetaSpec::Explicit(t.extract()?),
        },
    };
    let spec = ModelSpec {
        n,
        pi,
        p: p.concat(),
        theta,
        labels: if fixed_labels {
            LabelMode::Fixed
        } else {
            LabelMode::Sampled
        },
    };
    let real = spec.realize(&mut rng(seed)).map_err(err)?;
    Ok((
        DcsbmParams { inner: real.params },
        real.labels.as_slice().to_vec(),
    ))
}

/// Rescales raw degree parameters to mean one within each community.
#[pyfunction]
fn normalize_theta(theta: Vec<f64>, labels: Vec<usize>, pi: Vec<f64>) -> PyResult<Vec<f64>> {
    model::normalize_theta(&theta, &labels_from(labels)?, &pi).map_err(err)
}

/// Samples a network from the model.
#[pyfunction]
#[pyo3(signature = (params, labels, seed = 0))]
fn generate_network(params: &DcsbmParams, labels: Vec<usize>, seed: u64) -> PyResult<Network> {
    let labels = labels_from(labels)?;
    let mut inner = model::generate_network(&params.inner, &labels, &mut rng(seed)).map_err(err)?;
    inner.set_labels(labels).map_err(err)?;
    Ok(Network { inner })
}

/// Independent cascade on a fixed network. A `(within, between)` beta
/// needs a labelled network.
#[pyfunction]
#[pyo3(signature = (network, beta, seeds, t, seed = 0))]
fn simulate_ic(
    network: &Network,
    beta: Beta,
    seeds: Vec<usize>,
    t: usize,
    seed: u64,
) -> PyResult<Cascade> {
    let k = network.inner.labels().map_or(1, CommunityLabels::k);
    let mask = seed_mask(&seeds, network.inner.n())?;
    let inner = spread::simulate_ic(&network.inner, &beta.spec(k), &mask, t, &mut rng(seed))
        .map_err(err)?;
    Ok(Cascade { inner })
}

/// Probability that each node is active by step `t` under the model.
#[pyfunction]
fn exact_activation_probs(
    params: &DcsbmParams,
    labels: Vec<usize>,
    beta: Beta,
    seeds: Vec<usize>,
    t: usize,
) -> PyResult<Vec<f64>> {
    let labels = labels_from(labels)?;
    let mask = seed_mask(&seeds, labels.n())?;
    spread::exact_activation_probs(&params.inner, &labels, &beta.spec(labels.k()), &mask, t)
        .map_err(err)
}

/// The linearized objective over seed classes: nodes sharing a community
/// and degree parameter (within `theta_tol`) form one class.
#[pyclass(module = "fairspread")]
struct Objective {
    inner: ApproxObjective,
    classes: UniqueClasses,
    k: usize,
}

#[pymethods]
impl Objective {
    #[new]
    #[pyo3(signature = (params, labels, beta, lam, t, budget, theta_tol = 0.0))]
    fn new(
        params: &DcsbmParams,
        labels: Vec<usize>,
        beta: Beta,
        lam: f64,
        t: usize,
        budget: usize,
        theta_tol: f64,
    ) -> PyResult<Self> {
        let labels = labels_from(labels)?;
        let op = spread::build_psi(&params.inner, &labels, &beta.spec(labels.k())).map_err(err)?;
        let classes = optimizer::collapse_classes(&params.inner, &labels, theta_tol);
        let config = ObjectiveConfig::new(lam, t, budget);
        let inner =
            ApproxObjective::new(&op, &labels, &params.inner.pi, &classes, config).map_err(err)?;
        Ok(Self {
            inner,
            classes,
            k: labels.k(),
        })
    }

    /// Number of nodes in each class.
    #[getter]
    fn class_sizes(&self) -> Vec<usize> {
        self.classes.weights()
    }

    #[getter]
    fn class_communities(&self) -> Vec<usize> {
        self.classes.communities().to_vec()
    }

    /// `x[j]` is the seeded fraction of class `j`.
    fn evaluate<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        self.check(&x)?;
        eval_dict(py, &self.inner.evaluate(&x))
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&x)?;
        Ok(self.inner.grad(&x))
    }

    /// Maximizes over the relaxed feasible set, rounds to whole seeds and
    /// returns seeds per class and per community with the predicted
    /// objective at the rounded point.
    #[pyo3(signature = (restarts = 5, seed = 0))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        restarts: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let options = SolverOptions {
            restarts,
            seed,
            ..SolverOptions::default()
        };
        let budget = self.inner.config().budget;
        let sol = optimizer::solve_relaxed(
            &self.inner,
            &self.classes.weights_f64(),
            budget as f64,
            None,
            &options,
        )
        .map_err(err)?;
        let weights = self.classes.weights();
        let y = optimizer::round_allocation(&sol.x, &weights, budget).map_err(err)?;
        let xr: Vec<f64> = y
            .iter()
            .zip(&weights)
            .map(|(&a, &w)| a as f64 / w as f64)
            .collect();
        let d = PyDict::new(py);
        d.set_item("relaxed", sol.x.clone())?;
        d.set_item("relaxed_value", sol.value)?;
        d.set_item("converged", sol.converged)?;
        d.set_item("class_seeds", y.clone())?;
        d.set_item("seeds", self.classes.community_totals(&y, self.k))?;
        d.set_item("predicted", eval_dict(py, &self.inner.evaluate(&xr))?)?;
        Ok(d)
    }
}

impl Objective {
    fn check(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.classes.len() {
            return Err(PyValueError::new_err(format!(
                "x has {} entries for {} classes",
                x.len(),
                self.classes.len()
            )));
        }
        Ok(())
    }
}

/// Seeds per community for `"equal"`, `"proportional"` or `"largest"`.
#[pyfunction]
fn baseline_allocation(strategy: &str, sizes: Vec<usize>, budget: usize) -> PyResult<Vec<usize>> {
    let s: Strategy = strategy.parse().map_err(err)?;
    optimizer::baseline_allocation(s, &sizes, budget).map_err(err)
}

/// Spectral (SCORE) community detection on a connected network.
#[pyfunction]
#[pyo3(signature = (network, k, seed = 0))]
fn detect_communities(network: &Network, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    let labels = estimate::detect_communities(&network.inner, k, &mut rng(seed)).map_err(err)?;
    Ok(labels.as_slice().to_vec())
}

/// Plug-in estimates of `(π, P, θ)` given labels.
#[pyfunction]
fn estimate_params(network: &Network, labels: Vec<usize>) -> PyResult<DcsbmParams> {
    let est = estimate::estimate_params(&network.inner, &labels_from(labels)?).map_err(err)?;
    Ok(DcsbmParams { inner: est.params })
}

/// Fraction of nodes on which two labelings agree, under the best matching
/// of label values.
#[pyfunction]
fn label_agreement(estimated: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    Ok(estimate::best_permutation_agreement(
        &labels_from(estimated)?,
        &labels_from(truth)?,
    ))
}

#[pyfunction]
fn recipe_names() -> Vec<&'static str> {
    experiment::recipe_names().collect()
}

fn summary_dict<'py>(py: Python<'py>, s: &SummaryRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("strategy", s.strategy.name())?;
    d.set_item("t", s.t)?;
    d.set_item("lambda", s.lambda)?;
    d.set_item("beta_within", s.beta_within)?;
    d.set_item("beta_between", s.beta_between)?;
    d.set_item("seeds", s.seeds.clone())?;
    d.set_item("q_mean", s.q_mean.clone())?;
    d.set_item("entropy_mean", s.entropy_mean)?;
    d.set_item("entropy_sd", s.entropy_sd)?;
    d.set_item("coverage_mean", s.coverage_mean)?;
    d.set_item("coverage_sd", s.coverage_sd)?;
    d.set_item("spread_entropy_mean", s.spread_entropy_mean)?;
    d.set_item("spread_coverage_mean", s.spread_coverage_mean)?;
    d.set_item("pred_entropy", s.pred_entropy)?;
    d.set_item("pred_coverage", s.pred_coverage)?;
    Ok(d)
}

/// Runs an experiment from a built-in recipe name or a TOML string and
/// returns one summary dict per sweep point and strategy. With `out`, also
/// writes `results.csv`, `summary.csv` and `config.echo` there.
#[pyfunction]
#[pyo3(signature = (recipe = None, toml = None, replications = None, seed = None, out = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    recipe: Option<&str>,
    toml: Option<&str>,
    replications: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = match (recipe, toml) {
        (Some(name), None) => ExperimentConfig::builtin(name),
        (None, Some(text)) => ExperimentConfig::from_toml(text),
        _ => {
            return Err(PyValueError::new_err(
                "pass exactly one of recipe= or toml=",
            ))
        }
    }
    .map_err(err)?;
    if let Some(r) = replications {
        config.replications = r;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let output = py
        .detach(|| experiment::run_experiment(&config))
        .map_err(err)?;
    if let Some(dir) = out {
        experiment::write_results(&output, &dir).map_err(err)?;
    }
    output.summary.iter().map(|s| summary_dict(py, s)).collect()
}

#[pymodule]
#[pyo3(name = "fairspread")]
fn fairspread_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<DcsbmParams>()?;
    m.add_class::<Cascade>()?;
    m.add_class::<Objective>()?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_theta, m)?)?;
    m.add_function(wrap_pyfunction!(generate_network, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_ic, m)?)?;
    m.add_function(wrap_pyfunction!(exact_activation_probs, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(detect_communities, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_params, m)?)?;
    m.add_function(wrap_pyfunction!(label_agreement, m)?)?;
    m.add_function(wrap_pyfunction!(recipe_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
