//! Community detection by SCORE (ratios of leading adjacency eigenvectors
//! followed by k-means) and plug-in DCSBM estimates.

pub mod eigen;
pub mod kmeans;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::model::{normalize_theta, CommunityLabels, DcsbmParams};

pub use eigen::{leading_eigenpairs, EigenPair};
pub use kmeans::{kmeans, KMeansResult};

/// k-means restarts used by [`cluster`].
pub const CLUSTER_RESTARTS: usize = 20;

/// Leading eigenpairs of the adjacency and the SCORE ratio matrix.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// Leading `K` eigenvalues by magnitude.
    pub values: Vec<f64>,
    /// Matching unit eigenvectors; the first is oriented to have a positive sum.
    pub vectors: Vec<Vec<f64>>,
    /// Row `i` holds `v_{j+1}(i) / v_1(i)` for `j = 1..K`, clipped to `[−clip, clip]`.
    pub ratios: Vec<Vec<f64>>,
    pub clip: f64,
}

/// SCORE embedding of a connected network. `clip` defaults to `ln n`.
pub fn score_embed(network: &Network, k: usize, clip: Option<f64>) -> Result<SpectralEmbedding> {
    let n = network.n();
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    if let Some(i) = (0..n).find(|&i| network.degree(i) == 0) {
        return Err(Error::ZeroDegree(i));
    }
    let (_, components) = network.components();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let clip = clip.unwrap_or((n as f64).ln());
    if k == 1 {
        return Ok(SpectralEmbedding {
            values: Vec::new(),
            vectors: Vec::new(),
            ratios: vec![Vec::new(); n],
            clip,
        });
    }
    let pairs = leading_eigenpairs(|x| network.adjacency_apply(x), n, k)?;
    let lead = pairs[0].value.abs();
    if let Some(p) = pairs.iter().find(|p| p.value.abs() <= 1e-10 * lead) {
        return Err(Error::Eigen(format!(
            "K = {k} exceeds the distinguishable spectrum (|λ| = {:e})",
            p.value.abs()
        )));
    }
    let mut vectors: Vec<Vec<f64>> = pairs.iter().map(|p| p.vector.clone()).collect();
    if vectors[0].iter().sum::<f64>() < 0.0 {
        vectors[0].iter_mut().for_each(|v| *v = -*v);
    }
    let ratios = (0..n)
        .map(|i| {
            (1..k)
                .map(|j| {
                    let r = vectors[j][i] / vectors[0][i];
                    if r.is_nan() {
                        0.0
                    } else {
                        r.clamp(-clip, clip)
                    }
                })
                .collect()
        })
        .collect();
    Ok(SpectralEmbedding {
        values: pairs.iter().map(|p| p.value).collect(),
        vectors,
        ratios,
        clip,
    })
}

/// Relabels so community 0 is the largest; ties go to the community whose
/// first member has the lowest index.
pub fn relabel_by_size(assignment: &[usize], k: usize) -> CommunityLabels {
    let mut sizes = vec![0usize; k];
    let mut first = vec![usize::MAX; k];
    for (i, &c) in assignment.iter().enumerate() {
        sizes[c] += 1;
        first[c] = first[c].min(i);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(first[a].cmp(&first[b])));
    let mut rank = vec![0; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    CommunityLabels::new(assignment.iter().map(|&c| rank[c]).collect(), k)
        .expect("ranks are in range")
}

/// k-means on the SCORE ratio rows.
pub fn cluster<R: Rng + ?Sized>(
    embedding: &SpectralEmbedding,
    k: usize,
    rng: &mut R,
) -> Result<CommunityLabels> {
    let n = embedding.ratios.len();
    if k <= 1 {
        return CommunityLabels::new(vec![0; n], 1);
    }
    let res = kmeans(&embedding.ratios, k, CLUSTER_RESTARTS, rng)?;
    Ok(relabel_by_size(&res.assignment, k))
}

/// SCORE embedding followed by clustering.
pub fn detect_communities<R: Rng + ?Sized>(
    network: &Network,
    k: usize,
    rng: &mut R,
) -> Result<CommunityLabels> {
    let emb = score_embed(network, k, None)?;
    cluster(&emb, k, rng)
}

#[derive(Debug, Clone)]
pub struct EstimatedParams {
    pub params: DcsbmParams,
    pub labels: CommunityLabels,
    /// Edge counts between communities (diagonal counts each edge once).
    pub block_edges: DMatrix<f64>,
    pub warnings: Vec<String>,
}

/// Plug-in estimates: `π̂_k = n_k/n`, `P̂_kl` = edges between `C_k` and `C_l`
/// over possible pairs, and `θ̂_i = d_i n_k / Σ_{j∈C_k} d_j`.
pub fn estimate_params(network: &Network, labels: &CommunityLabels) -> Result<EstimatedParams> {
    let n = network.n();
    if labels.n() != n {
        return Err(Error::Dimension {
            what: "labels",
            got: labels.n(),
            expected: n,
        });
    }
    let k = labels.k();
    let sizes = labels.sizes();
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCommunity(c));
    }
    if let Some(i) = (0..n).find(|&i| network.degree(i) == 0) {
        return Err(Error::ZeroDegree(i));
    }
    let mut edges = DMatrix::zeros(k, k);
    for (i, j) in network.edges() {
        let (a, b) = (labels.of(i), labels.of(j));
        edges[(a, b)] += 1.0;
        if a != b {
            edges[(b, a)] += 1.0;
        }
    }
    let mut warnings = Vec::new();
    let mut p = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let pairs = if a == b {
                (sizes[a] * (sizes[a] - 1) / 2) as f64
            } else {
                (sizes[a] * sizes[b]) as f64
            };
            if pairs == 0.0 {
                if a <= b {
                    warnings.push(format!(
                        "block ({a}, {b}) has no possible pairs; P set to 0"
                    ));
                }
                continue;
            }
            p[(a, b)] = edges[(a, b)] / pairs;
        }
    }
    let pi: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
    let mut degree_sums = vec![0.0; k];
    for i in 0..n {
        degree_sums[labels.of(i)] += network.degree(i) as f64;
    }
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let c = labels.of(i);
            network.degree(i) as f64 * sizes[c] as f64 / degree_sums[c]
        })
        .collect();
    let theta = normalize_theta(&raw, labels, &pi)?;
    let params = DcsbmParams::new(pi, p, theta);
    for v in params.validate_with_labels(labels) {
        warnings.push(v.to_string());
    }
    Ok(EstimatedParams {
        params,
        labels: labels.clone(),
        block_edges: edges,
        warnings,
    })
}

/// `confusion[a][b]`: nodes with label `a` in `estimated` and `b` in `truth`.
pub fn confusion(estimated: &CommunityLabels, truth: &CommunityLabels) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; truth.k()]; estimated.k()];
    for (&a, &b) in estimated.as_slice().iter().zip(truth.as_slice()) {
        m[a][b] += 1;
    }
    m
}

/// Fraction of nodes on which two labelings agree under the best matching of
/// label values (exhaustive over permutations, so keep `K` small).
pub fn best_permutation_agreement(estimated: &CommunityLabels, truth: &CommunityLabels) -> f64 {
    best_permutation(estimated, truth).1
}

/// The permutation `perm` (estimated label `a` ↦ true label `perm[a]`)
/// maximizing agreement, and that agreement.
pub fn best_permutation(estimated: &CommunityLabels, truth: &CommunityLabels) -> (Vec<usize>, f64) {
    let conf = confusion(estimated, truth);
    let k = estimated.k().max(truth.k());
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (perm.clone(), 0usize);
    permute(&mut perm, 0, &mut |p| {
        let hits: usize = (0..estimated.k())
            .map(|a| conf[a].get(p[a]).copied().unwrap_or(0))
            .sum();
        if hits > best.1 {
            best = (p.to_vec(), hits);
        }
    });
    best.0.truncate(estimated.k());
    (best.0, best.1 as f64 / estimated.n().max(1) as f64)
}

fn permute(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}
