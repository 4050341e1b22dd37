//! Principal component projection by power iteration with deflation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;

/// Leading principal components of a point set and the projected points.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    /// Unit-length, mutually orthogonal principal directions.
    pub components: Vec<Vec<f64>>,
    /// One row per input vector: its coordinates along each component.
    pub coordinates: Vec<Vec<f64>>,
    /// Sample variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
    /// Total sample variance of the input (trace of the covariance).
    pub total_variance: f64,
}

/// Two-dimensional projection, as used for plotting.
pub fn pca_project(vectors: &[Vec<f64>]) -> Result<PcaProjection> {
    pca_project_n(vectors, 2)
}

/// Projects mean-centered `vectors` onto their top `n_components` principal
/// components.
///
/// Each component is found by power iteration on the sample covariance,
/// deflated by the components already found, until the eigen-residual
/// `|Cv - lambda v|` falls below `TOLERANCE` relative to the total variance.
/// The largest-magnitude entry of each component is made positive.
pub fn pca_project_n(vectors: &[Vec<f64>], n_components: usize) -> Result<PcaProjection> {
    if vectors.len() < 3 {
        return Err(Error::Input(format!("PCA needs at least 3 vectors, got {}", vectors.len())));
    }
    let dim = vectors[0].len();
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Input("PCA input vectors must share a positive length".into()));
    }
    if n_components == 0 || n_components > dim {
        return Err(Error::Input(format!(
            "cannot extract {n_components} components from {dim}-dimensional data"
        )));
    }

    let n = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let mut cov = vec![0.0; dim * dim];
    for v in &centered {
        for i in 0..dim {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let row = &mut cov[i * dim..(i + 1) * dim];
            for (c, vj) in row.iter_mut().zip(v) {
                *c += vi * vj;
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n - 1.0);
    let total_variance: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(n_components);
    let mut variances = Vec::with_capacity(n_components);
    for c in 0..n_components {
        let (v, lambda) = leading_eigenvector(&cov, dim, &components, &variances, total_variance, c as u64)?;
        components.push(v);
        variances.push(lambda);
    }

    let coordinates = centered
        .iter()
        .map(|v| components.iter().map(|c| dot(v, c)).collect())
        .collect();
    Ok(PcaProjection {
        components,
        coordinates,
        explained_variance: variances,
        mean,
        total_variance,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let p = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, bi)| *x -= p * bi);
    }
}

/// `(C - sum_i lambda_i u_i u_i^T) v`
fn deflated_product(cov: &[f64], dim: usize, found: &[Vec<f64>], lambdas: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = cov.chunks_exact(dim).map(|row| dot(row, v)).collect();
    for (u, l) in found.iter().zip(lambdas) {
        let p = l * dot(u, v);
        out.iter_mut().zip(u).for_each(|(o, ui)| *o -= p * ui);
    }
    out
}

fn leading_eigenvector(
    cov: &[f64],
    dim: usize,
    found: &[Vec<f64>],
    lambdas: &[f64],
    total_variance: f64,
    stream: u64,
) -> Result<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    rng.set_stream(stream);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    orthogonalize(&mut v, found);
    if normalize(&mut v) == 0.0 {
        return Err(Error::Input("degenerate PCA start vector".into()));
    }
    let scale = total_variance.max(f64::MIN_POSITIVE);
    let negligible = scale * 1e-14;

    for _ in 0..MAX_ITERATIONS {
        let mut w = deflated_product(cov, dim, found, lambdas, &v);
        orthogonalize(&mut w, found);
        let lambda = dot(&v, &w);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = dot(&w, &w).sqrt();
        if norm <= negligible {
            // nothing left to explain; any orthogonal direction will do
            return Ok((sign_fixed(v), 0.0));
        }
        if residual <= TOLERANCE * scale {
            w.iter_mut().for_each(|x| *x /= norm);
            return Ok((sign_fixed(w), lambda.max(0.0)));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
    }
    Err(Error::NotConverged {
        iterations: MAX_ITERATIONS,
    })
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn sign_fixed(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}
