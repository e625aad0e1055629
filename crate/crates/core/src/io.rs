//! Edge lists, label files and trace export.
//!
//! Edge lists hold one pair of node ids per line, separated by whitespace or
//! a comma; lines starting with `#` are skipped. Label files hold
//! `node,label` rows.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::model::CommunityLabels;
use crate::spread::ActivationTrace;

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads an undirected simple graph. Direction is ignored, duplicates
/// collapse and self-loops are dropped; node ids are numbered in order of
/// first appearance and kept as [`Network::ids`].
pub fn read_edge_list(path: &Path, label_path: Option<&Path>) -> Result<Network> {
    let text = fs::read_to_string(path)?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut ids: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f = fields(trimmed);
        if f.len() != 2 {
            return Err(parse_error(
                path,
                lineno + 1,
                format!("expected 2 node ids, found {}", f.len()),
            ));
        }
        let mut id = |s: &str| -> usize {
            *index.entry(s.to_string()).or_insert_with(|| {
                ids.push(s.to_string());
                ids.len() - 1
            })
        };
        let a = id(f[0]);
        let b = id(f[1]);
        edges.push((a, b));
    }
    let mut net = Network::from_edges(ids.len(), edges);
    if let Some(lp) = label_path {
        let labels = read_labels(lp, &index)?;
        net.set_labels(labels)?;
    }
    net.set_ids(ids)?;
    Ok(net)
}

/// Parses a label file against known node ids. Label values are mapped to
/// `0..K` in sorted order (numerically when every value is an integer).
fn read_labels(path: &Path, index: &HashMap<String, usize>) -> Result<CommunityLabels> {
    let text = fs::read_to_string(path)?;
    let mut raw: Vec<Option<String>> = vec![None; index.len()];
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f = fields(trimmed);
        if first {
            first = false;
            if f.len() == 2
                && f[0].eq_ignore_ascii_case("node")
                && f[1].eq_ignore_ascii_case("label")
            {
                continue;
            }
        }
        if f.len() != 2 {
            return Err(parse_error(
                path,
                lineno + 1,
                format!("expected node and label, found {} fields", f.len()),
            ));
        }
        let &i = index
            .get(f[0])
            .ok_or_else(|| Error::UnknownNode(f[0].to_string()))?;
        raw[i] = Some(f[1].to_string());
    }
    let mut values: Vec<String> = raw
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if values.iter().all(|v| v.parse::<i64>().is_ok()) {
        values.sort_by_key(|v| v.parse::<i64>().expect("checked"));
    }
    let code: HashMap<&str, usize> = values
        .iter()
        .enumerate()
        .map(|(c, v)| (v.as_str(), c))
        .collect();
    let mut labels = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        match r {
            Some(v) => labels.push(code[v.as_str()]),
            None => {
                let id = index
                    .iter()
                    .find(|(_, &j)| j == i)
                    .map(|(s, _)| s.clone())
                    .unwrap_or_default();
                return Err(parse_error(path, 0, format!("node {id:?} has no label")));
            }
        }
    }
    CommunityLabels::new(labels, values.len().max(1))
}

/// Keeps only nodes whose community is among the `count` largest, then
/// renumbers those communities by decreasing size.
pub fn keep_largest_communities(network: &Network, count: usize) -> Result<Network> {
    let labels = network
        .labels()
        .ok_or_else(|| Error::Config("community filter needs labels".into()))?;
    let sizes = labels.sizes();
    let mut order: Vec<usize> = (0..labels.k()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    order.truncate(count);
    let mut rank = vec![usize::MAX; labels.k()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let nodes: Vec<usize> = (0..network.n())
        .filter(|&i| rank[labels.of(i)] != usize::MAX)
        .collect();
    let mut sub = network.induced(&nodes);
    let relabeled = nodes.iter().map(|&i| rank[labels.of(i)]).collect();
    sub.set_labels(CommunityLabels::new(relabeled, order.len())?)?;
    Ok(sub)
}

pub fn write_edge_list(network: &Network, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (i, j) in network.edges() {
        writeln!(out, "{} {}", network.node_name(i), network.node_name(j))?;
    }
    out.flush()?;
    Ok(())
}

/// `node,label` CSV with 1-based labels.
pub fn write_labels(network: &Network, labels: &CommunityLabels, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "label"])?;
    for i in 0..labels.n() {
        w.write_record([network.node_name(i), (labels.of(i) + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `node,community,activation_time` CSV; never-activated nodes have an
/// empty time.
pub fn write_trace(
    network: &Network,
    labels: &CommunityLabels,
    trace: &ActivationTrace,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "community", "activation_time"])?;
    for i in 0..labels.n() {
        let time = trace.activated_at[i]
            .map(|t| t.to_string())
            .unwrap_or_default();
        w.write_record([network.node_name(i), (labels.of(i) + 1).to_string(), time])?;
    }
    w.flush()?;
    Ok(())
}

/// How the seed budget is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRule {
    Explicit(usize),
    FloorSqrtN,
}

impl std::str::FromStr for BudgetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrt" | "floor-sqrt-n" => Ok(BudgetRule::FloorSqrtN),
            other => other.parse().map(BudgetRule::Explicit).map_err(|_| {
                Error::Config(format!(
                    "budget {other:?} is neither an integer nor \"sqrt\""
                ))
            }),
        }
    }
}

pub fn seed_budget(n: usize, rule: BudgetRule) -> Result<usize> {
    let m = match rule {
        BudgetRule::Explicit(m) => m,
        BudgetRule::FloorSqrtN => (n as f64).sqrt().floor() as usize,
    };
    if m > n {
        return Err(Error::BudgetTooLarge {
            budget: m,
            available: n,
        });
    }
    Ok(m)
}
