//! Leading eigenpairs of a symmetric operator by Lanczos iteration with full
//! reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative residual every returned pair must meet.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    /// `‖A v − λ v‖`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // twice is enough
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Deterministic pseudo-random start vector (golden-ratio sequence).
fn start_vector(n: usize, salt: usize) -> Vec<f64> {
    let phi = 0.618_033_988_749_894_9;
    (0..n)
        .map(|i| {
            let u = ((i + 1) as f64 * phi + salt as f64 * 0.414_213_562_373_095).fract();
            0.5 + u
        })
        .collect()
}

/// The `k` eigenpairs of largest magnitude of the symmetric operator
/// `apply` on `R^n`, ordered by decreasing `|λ|`.
pub fn leading_eigenpairs<F>(apply: F, n: usize, k: usize) -> Result<Vec<EigenPair>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > n {
        return Err(Error::Eigen(format!(
            "{k} eigenpairs requested from a {n}-dimensional operator"
        )));
    }
    let mut m = n.min((4 * k + 40).max(80));
    loop {
        let pairs = lanczos(&apply, n, k, m);
        let worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
        if worst <= RESIDUAL_TOL * 1e-2 || m == n {
            if worst > RESIDUAL_TOL {
                return Err(Error::Eigen(format!("residual {worst:e} above tolerance")));
            }
            return Ok(pairs);
        }
        m = n.min(2 * m);
    }
}

fn lanczos<F>(apply: &F, n: usize, k: usize, m: usize) -> Vec<EigenPair>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut q = start_vector(n, 0);
    normalize(&mut q);
    let mut salt = 1;
    while basis.len() < m {
        let mut w = apply(&q);
        let a = dot(&w, &q);
        alpha.push(a);
        basis.push(q);
        orthogonalize(&mut w, &basis);
        if basis.len() == m {
            break;
        }
        let mut b = normalize(&mut w);
        if b < 1e-10 {
            // invariant subspace: continue from a fresh orthogonal direction
            loop {
                w = start_vector(n, salt);
                salt += 1;
                orthogonalize(&mut w, &basis);
                if normalize(&mut w) > 1e-8 {
                    break;
                }
            }
            b = 0.0;
        }
        beta.push(b);
        q = w;
    }
    let size = basis.len();
    let mut t = DMatrix::zeros(size, size);
    for i in 0..size {
        t[(i, i)] = alpha[i];
        if i + 1 < size {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
    });
    order
        .into_iter()
        .take(k)
        .map(|idx| {
            let value = eig.eigenvalues[idx];
            let mut vector = vec![0.0; n];
            for (j, qj) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(j, idx)];
                vector.iter_mut().zip(qj).for_each(|(v, x)| *v += c * x);
            }
            normalize(&mut vector);
            let av = apply(&vector);
            let residual = av
                .iter()
                .zip(&vector)
                .map(|(a, v)| (a - value * v).powi(2))
                .sum::<f64>()
                .sqrt();
            EigenPair {
                value,
                vector,
                residual,
            }
        })
        .collect()
}
