//! Lloyd's k-means with k-means++ seeding and restarts.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

const MAX_ITER: usize = 300;
const MAX_ATTEMPTS_PER_RESTART: usize = 10;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // all points coincide with a centroid
            Err(_) => rng.random_range(0..points.len()),
        };
        centroids.push(points[next].clone());
        let c = centroids.last().expect("pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centroids
}

/// One Lloyd run. `None` when a cluster ends up empty.
fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> Option<KMeansResult> {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centroids[a]).total_cmp(&sq_dist(p, &centroids[b])))
                .expect("k > 0");
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            sums[c].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        if counts.contains(&0) {
            return None;
        }
        for c in 0..k {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    Some(KMeansResult {
        assignment,
        centroids,
        inertia,
    })
}

/// Best of `restarts` k-means runs by within-cluster sum of squares.
/// A run that leaves a cluster empty is redrawn.
pub fn kmeans<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<KMeansResult> {
    if k == 0 || points.len() < k {
        return Err(Error::Config(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite embedding row".into()));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        for _ in 0..MAX_ATTEMPTS_PER_RESTART {
            if let Some(run) = lloyd(points, plus_plus(points, k, rng)) {
                if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
                    best = Some(run);
                }
                break;
            }
        }
    }
    best.ok_or_else(|| Error::Config(format!("k-means could not fill {k} clusters")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separated_points_have_zero_inertia() {
        let points: Vec<Vec<f64>> = [0.0, 0.0, 0.0, 5.0, 5.0, 9.0]
            .iter()
            .map(|&v| vec![v, -v])
            .collect();
        let res = kmeans(&points, 3, 20, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(res.inertia.abs() < 1e-12);
        assert_eq!(res.assignment[0], res.assignment[2]);
        assert_ne!(res.assignment[0], res.assignment[3]);
        assert_ne!(res.assignment[3], res.assignment[5]);
    }

    #[test]
    fn too_few_points() {
        assert!(kmeans(&[vec![1.0]], 2, 1, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }
}
