//! Undirected simple graphs with optional community labels.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::CommunityLabels;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
    labels: Option<CommunityLabels>,
    /// Original node identifiers, when read from a file.
    ids: Option<Vec<String>>,
}

impl Network {
    /// Builds a simple graph. Self-loops are dropped and duplicate or
    /// reversed pairs collapse to one edge.
    ///
    /// Panics if an endpoint is `>= n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut edge_count = 0;
        for nbrs in &mut adj {
            nbrs.sort_unstable();
            nbrs.dedup();
            edge_count += nbrs.len();
        }
        Self {
            adj,
            edge_count: edge_count / 2,
            labels: None,
            ids: None,
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn labels(&self) -> Option<&CommunityLabels> {
        self.labels.as_ref()
    }

    pub fn set_labels(&mut self, labels: CommunityLabels) -> Result<()> {
        if labels.n() != self.n() {
            return Err(Error::Dimension {
                what: "labels",
                got: labels.n(),
                expected: self.n(),
            });
        }
        self.labels = Some(labels);
        Ok(())
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn set_ids(&mut self, ids: Vec<String>) -> Result<()> {
        if ids.len() != self.n() {
            return Err(Error::Dimension {
                what: "ids",
                got: ids.len(),
                expected: self.n(),
            });
        }
        self.ids = Some(ids);
        Ok(())
    }

    /// Display name of node `i`: its original id, or the index.
    pub fn node_name(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    /// `y = A x`.
    pub fn adjacency_apply(&self, x: &[f64]) -> Vec<f64> {
        self.adj
            .iter()
            .map(|nbrs| nbrs.iter().map(|&j| x[j]).sum())
            .collect()
    }

    /// Component index per node; components are numbered by their lowest node.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    pub fn is_connected(&self) -> bool {
        self.components().1 <= 1
    }

    /// Subgraph induced by `nodes` (given in increasing order). Labels and
    /// ids are carried over.
    pub fn induced(&self, nodes: &[usize]) -> Network {
        let mut index = vec![usize::MAX; self.n()];
        for (new, &old) in nodes.iter().enumerate() {
            index[old] = new;
        }
        let edges = self
            .edges()
            .filter(|&(a, b)| index[a] != usize::MAX && index[b] != usize::MAX)
            .map(|(a, b)| (index[a], index[b]));
        let mut sub = Network::from_edges(nodes.len(), edges);
        if let Some(labels) = &self.labels {
            let l = nodes.iter().map(|&i| labels.of(i)).collect();
            sub.labels = CommunityLabels::new(l, labels.k()).ok();
        }
        sub.ids = Some(nodes.iter().map(|&i| self.node_name(i)).collect());
        sub
    }
}

/// Largest connected component, ties going to the component containing the
/// lowest node index. Returns the subgraph and the original index of each of
/// its nodes.
pub fn extract_lcc(network: &Network) -> (Network, Vec<usize>) {
    let (comp, count) = network.components();
    let mut sizes = vec![0usize; count];
    for &c in &comp {
        sizes[c] += 1;
    }
    // components are numbered in order of their lowest node, so the first
    // maximum wins ties
    let best = sizes
        .iter()
        .enumerate()
        .fold((0, 0), |acc, (c, &s)| if s > acc.1 { (c, s) } else { acc })
        .0;
    let nodes: Vec<usize> = (0..network.n()).filter(|&i| comp[i] == best).collect();
    (network.induced(&nodes), nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedups_and_drops_self_loops() {
        let net = Network::from_edges(3, [(0, 1), (1, 0), (0, 0)]);
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(net.degree(2), 0);
    }

    #[test]
    fn lcc_of_connected_graph_is_identity() {
        let net = Network::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let (lcc, map) = extract_lcc(&net);
        assert_eq!(map, vec![0, 1, 2, 3]);
        assert_eq!(
            lcc.edges().collect::<Vec<_>>(),
            net.edges().collect::<Vec<_>>()
        );
    }

    #[test]
    fn lcc_picks_larger_component() {
        // sizes 3 and 5
        let net = Network::from_edges(8, [(0, 1), (1, 2), (3, 4), (4, 5), (5, 6), (6, 7)]);
        let (lcc, map) = extract_lcc(&net);
        assert_eq!(map, vec![3, 4, 5, 6, 7]);
        assert_eq!(lcc.n(), 5);
        assert_eq!(lcc.edge_count(), 4);
        assert_eq!(lcc.node_name(0), "3");
    }

    #[test]
    fn lcc_tie_goes_to_lowest_node() {
        let net = Network::from_edges(4, [(2, 3), (0, 1)]);
        let (_, map) = extract_lcc(&net);
        assert_eq!(map, vec![0, 1]);
    }
}
