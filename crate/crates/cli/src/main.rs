//! `fairspread` command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fairspread::estimate::{best_permutation_agreement, detect_communities, estimate_params};
use fairspread::experiment::{
    plan_experiment, recipe_names, run_experiment, stream, write_results, BetaSpec, BudgetSpec,
    ExperimentConfig, OneOrMany,
};
use fairspread::graph::extract_lcc;
use fairspread::io::{read_edge_list, write_edge_list, write_labels, write_trace};
use fairspread::model::{generate_network, ModelSpec};
use fairspread::optimizer::{expand_groups, Strategy};
use fairspread::spread::{coverage, simulate_ic, TransmissionSpec};

#[derive(Parser)]
#[command(
    name = "fairspread",
    version,
    about = "Fair seed allocation for information spread on block-model networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a network from a block model and write it as an edge list.
    Generate {
        /// Model file (a `[model]` table or an experiment config).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate communities of an edge list by spectral clustering.
    Detect {
        #[arg(long)]
        edges: PathBuf,
        /// Ground-truth labels to score against.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        /// Restrict to the largest connected component first.
        #[arg(long)]
        lcc: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the seed allocation of each strategy at each sweep point.
    Allocate {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run cascades from a per-community allocation on a labeled network.
    Simulate {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Seeds per community, e.g. `4,8,18`.
        #[arg(long, value_delimiter = ',', required = true)]
        allocation: Vec<usize>,
        #[arg(long)]
        beta_within: f64,
        /// Defaults to `--beta-within`.
        #[arg(long)]
        beta_between: Option<f64>,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment and write results.csv, summary.csv and config.echo.
    Experiment {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config file.
    #[arg(long, conflicts_with = "recipe", required_unless_present = "recipe")]
    config: Option<PathBuf>,
    /// Built-in recipe name.
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    strategy: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta_within: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta_between: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    t: Vec<usize>,
    /// Integer or `sqrt` for floor(sqrt(n)).
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    replications: Option<usize>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match (&self.config, &self.recipe) {
            (Some(path), _) => ExperimentConfig::from_path(path)
                .with_context(|| format!("reading {}", path.display()))?,
            (None, Some(name)) => ExperimentConfig::builtin(name).with_context(|| {
                format!(
                    "known recipes: {}",
                    recipe_names().collect::<Vec<_>>().join(", ")
                )
            })?,
            (None, None) => bail!("either --config or --recipe is required"),
        };
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(out) = &self.out {
            c.out = Some(out.clone());
        }
        if !self.strategy.is_empty() {
            c.strategies = self
                .strategy
                .iter()
                .map(|s| s.parse::<Strategy>())
                .collect::<Result<_, _>>()?;
        }
        if !self.lambda.is_empty() {
            c.lambda = OneOrMany::Many(self.lambda.clone());
        }
        if !self.t.is_empty() {
            c.t = OneOrMany::Many(self.t.clone());
        }
        match (self.beta_within.is_empty(), self.beta_between.is_empty()) {
            (true, true) => {}
            (false, true) => c.beta = BetaSpec::Uniform(OneOrMany::Many(self.beta_within.clone())),
            (true, false) => bail!("--beta-between needs --beta-within"),
            (false, false) => {
                c.beta = BetaSpec::Grid {
                    within: self.beta_within.clone(),
                    between: self.beta_between.clone(),
                }
            }
        }
        if let Some(b) = &self.budget {
            c.budget = match b.parse::<usize>() {
                Ok(m) => BudgetSpec::Count(m),
                Err(_) => BudgetSpec::Rule(b.clone()),
            };
        }
        if let Some(r) = self.replications {
            c.replications = r;
        }
        c.validate()?;
        Ok(c)
    }
}

fn read_model(path: &Path) -> Result<ModelSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    #[derive(serde::Deserialize)]
    struct Wrapper {
        model: ModelSpec,
    }
    if let Ok(w) = toml::from_str::<Wrapper>(&text) {
        return Ok(w.model);
    }
    toml::from_str::<ModelSpec>(&text).with_context(|| format!("{} holds no model", path.display()))
}

fn fmt_counts(v: &[usize]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, seed, out } => {
            let spec = read_model(&config)?;
            let mut rng = stream(seed, &[]);
            let real = spec.realize(&mut rng)?;
            let net = generate_network(&real.params, &real.labels, &mut rng)?;
            fs::create_dir_all(&out)?;
            write_edge_list(&net, &out.join("edges.txt"))?;
            write_labels(&net, &real.labels, &out.join("labels.csv"))?;
            println!(
                "{} nodes, {} edges -> {}",
                net.n(),
                net.edge_count(),
                out.display()
            );
        }
        Command::Detect {
            edges,
            labels,
            k,
            lcc,
            seed,
            out,
        } => {
            let mut net = read_edge_list(&edges, labels.as_deref())?;
            if lcc {
                net = extract_lcc(&net).0;
            }
            let detected = detect_communities(&net, k, &mut stream(seed, &[]))?;
            fs::create_dir_all(&out)?;
            write_labels(&net, &detected, &out.join("labels.csv"))?;
            println!(
                "{} nodes, community sizes {}",
                net.n(),
                fmt_counts(&detected.sizes())
            );
            if let Some(truth) = net.labels().filter(|t| t.k() == k) {
                println!(
                    "agreement with given labels: {:.4}",
                    best_permutation_agreement(&detected, truth)
                );
            }
            let est = estimate_params(&net, &detected)?;
            println!("P estimate:{}", est.params.p);
            for w in est.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Allocate { exp } => {
            let config = exp.resolve()?;
            let plan = plan_experiment(&config)?;
            println!(
                "{}: n = {}, K = {}, M = {}, {} classes",
                config.id, plan.n, plan.k, plan.budget, plan.classes
            );
            println!("t,lambda,beta_within,beta_between,strategy,seeds,pred_coverage,pred_entropy");
            for p in &plan.plans {
                let s = &plan.sweep[p.sweep];
                println!(
                    "{},{},{},{},{},\"{}\",{:.6},{:.6}",
                    s.t,
                    s.lambda,
                    s.beta_within,
                    s.beta_between,
                    p.strategy.name(),
                    fmt_counts(&p.seeds),
                    p.predicted.coverage,
                    p.predicted.entropy
                );
            }
        }
        Command::Simulate {
            edges,
            labels,
            allocation,
            beta_within,
            beta_between,
            t,
            runs,
            seed,
            out,
        } => {
            let net = read_edge_list(&edges, Some(&labels))?;
            let labels = net.labels().cloned().context("label file gave no labels")?;
            if allocation.len() != labels.k() {
                bail!(
                    "allocation has {} entries for {} communities",
                    allocation.len(),
                    labels.k()
                );
            }
            let between = beta_between.unwrap_or(beta_within);
            let tspec = if between == beta_within {
                TransmissionSpec::Scalar(beta_within)
            } else {
                TransmissionSpec::within_between(labels.k(), beta_within, between)
            };
            let members = labels.members();
            let groups: Vec<&[usize]> = members.iter().map(Vec::as_slice).collect();
            fs::create_dir_all(&out)?;
            let mut w = csv::Writer::from_path(out.join("coverage.csv"))?;
            let mut header = vec!["run".to_string()];
            header.extend((1..=labels.k()).map(|c| format!("q_{c}")));
            header.extend(["entropy".into(), "coverage".into()]);
            w.write_record(&header)?;
            let (mut h_sum, mut m_sum) = (0.0, 0.0);
            for run in 0..runs.max(1) {
                let mut rng = stream(seed, &[run as u64]);
                let seeds = expand_groups(&allocation, &groups, net.n(), &mut rng)?;
                let trace = simulate_ic(&net, &tspec, &seeds, t, &mut rng)?;
                if run == 0 {
                    write_trace(&net, &labels, &trace, &out.join("trace.csv"))?;
                }
                let cov = coverage(&trace, &labels, t)?;
                h_sum += cov.entropy;
                m_sum += cov.m;
                let mut rec = vec![run.to_string()];
                rec.extend(cov.q.iter().map(ToString::to_string));
                rec.extend([cov.entropy.to_string(), cov.m.to_string()]);
                w.write_record(&rec)?;
            }
            w.flush()?;
            let r = runs.max(1) as f64;
            println!(
                "mean entropy {:.4}, mean coverage {:.4} over {} runs",
                h_sum / r,
                m_sum / r,
                runs.max(1)
            );
        }
        Command::Experiment { exp } => {
            let config = exp.resolve()?;
            let out_dir = config
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("results").join(&config.id));
            let output = run_experiment(&config)?;
            write_results(&output, &out_dir)?;
            if let Some(obs) = &output.observed {
                if let Some(a) = obs.agreement {
                    println!("community agreement with given labels: {a:.4}");
                }
                for w in &obs.warnings {
                    eprintln!("warning: {w}");
                }
            }
            println!("strategy,t,lambda,beta_within,beta_between,seeds,entropy_mean,coverage_mean");
            for s in &output.summary {
                println!(
                    "{},{},{},{},{},\"{}\",{:.4},{:.4}",
                    s.strategy.name(),
                    s.t,
                    s.lambda,
                    s.beta_within,
                    s.beta_between,
                    fmt_counts(&s.seeds),
                    s.entropy_mean,
                    s.coverage_mean
                );
            }
            println!("{} rows -> {}", output.rows.len(), out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
