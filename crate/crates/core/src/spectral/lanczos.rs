//! Restarted Lanczos iteration for the algebraically largest eigenpairs of a
//! sparse symmetric matrix.
//!
//! Each cycle builds a Krylov basis with full reorthogonalization, extracts
//! the largest Ritz pair from the projected tridiagonal matrix, and restarts
//! from that Ritz vector until the explicit residual meets the tolerance.
//! Further eigenpairs are found by deflation: the Krylov basis is kept
//! orthogonal to every eigenvector already accepted.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SignedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Residual tolerance relative to `max(1, |lambda|)`.
    pub tol: f64,
    /// Matrix-vector product budget per eigenpair. `None` means
    /// `10 sqrt(n) + 200`.
    pub max_iter: Option<usize>,
    /// Krylov basis size per restart cycle.
    pub krylov_dim: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: None, krylov_dim: 64 }
    }
}

impl SolverOptions {
    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| (10.0 * (n as f64).sqrt()).ceil() as usize + 200)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector with a deterministic sign (see [`canonical_sign`]).
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    /// Sorted by eigenvalue, largest first.
    pub pairs: Vec<EigenPair>,
    /// Total matrix-vector products used.
    pub iterations: usize,
}

/// Flips `v` so that its entries sum to a positive value; when the sum is
/// numerically zero the first non-negligible entry is made positive.
pub fn canonical_sign(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    let scale = v.iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let flip = if sum.abs() > 1e-10 * scale {
        sum < 0.0
    } else {
        v.iter().find(|x| x.abs() > 1e-10 * scale).is_some_and(|&x| x < 0.0)
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(w, b);
            axpy(-c, b, w);
        }
    }
}

/// Computes the `k` algebraically largest eigenpairs of `m`.
pub fn top_eigenpairs<R: Rng + ?Sized>(
    m: &SignedMatrix,
    k: usize,
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<Eigenpairs> {
    let n = m.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("cannot compute {k} eigenpairs of a {n}x{n} matrix")));
    }
    if !(opts.tol > 0.0) || opts.krylov_dim < 2 {
        return Err(Error::InvalidParameter(format!("bad solver options {opts:?}")));
    }
    if m.is_zero() {
        return Err(Error::DegenerateSpectrum);
    }
    let budget = opts.max_iter_for(n);
    let mut found: Vec<EigenPair> = Vec::with_capacity(k);
    let mut iterations = 0;
    for _ in 0..k {
        let deflate: Vec<Vec<f64>> = found.iter().map(|p| p.vector.clone()).collect();
        let (pair, used) = largest_in_complement(m, &deflate, opts, budget, rng)?;
        iterations += used;
        found.push(pair);
    }
    found.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(Eigenpairs { pairs: found, iterations })
}

fn random_unit<R: Rng + ?Sized>(n: usize, deflate: &[Vec<f64>], rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        orthogonalize(&mut v, deflate);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

struct Cycle {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

fn largest_in_complement<R: Rng + ?Sized>(
    m: &SignedMatrix,
    deflate: &[Vec<f64>],
    opts: &SolverOptions,
    budget: usize,
    rng: &mut R,
) -> Result<(EigenPair, usize)> {
    let n = m.n();
    let dim = (n - deflate.len()).min(opts.krylov_dim).max(1);
    let scale = m.max_row_abs_sum().max(f64::MIN_POSITIVE);
    let mut used = 0;
    let mut start = random_unit(n, deflate, rng);
    let mut best: Option<Cycle> = None;
    let mut stalled = 0;

    while used < budget {
        let cycle = lanczos_cycle(m, deflate, start, dim.min(budget - used), scale, &mut used)?;
        let tol = opts.tol * cycle.value.abs().max(1.0);
        if cycle.residual <= tol {
            let mut vector = cycle.vector;
            canonical_sign(&mut vector);
            return Ok((EigenPair { value: cycle.value, vector }, used));
        }
        let improved = best.as_ref().is_none_or(|b| cycle.residual < 0.99 * b.residual);
        stalled = if improved { 0 } else { stalled + 1 };
        start = if stalled >= 3 {
            stalled = 0;
            random_unit(n, deflate, rng)
        } else {
            cycle.vector.clone()
        };
        if best.as_ref().is_none_or(|b| cycle.residual < b.residual) {
            best = Some(cycle);
        }
    }
    Err(Error::Convergence { iterations: used, residual: best.map_or(f64::INFINITY, |b| b.residual) })
}

fn lanczos_cycle(
    m: &SignedMatrix,
    deflate: &[Vec<f64>],
    start: Vec<f64>,
    dim: usize,
    scale: f64,
    used: &mut usize,
) -> Result<Cycle> {
    let n = m.n();
    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut alphas: Vec<f64> = Vec::with_capacity(dim);
    let mut betas: Vec<f64> = Vec::with_capacity(dim);
    let mut w = vec![0.0; n];
    for j in 0..dim {
        m.matvec_into(&basis[j], &mut w);
        *used += 1;
        let a = dot(&w, &basis[j]);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-betas[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(&mut w, deflate);
        orthogonalize(&mut w, &basis);
        alphas.push(a);
        let b = norm(&w);
        if j + 1 == dim || b <= 1e-12 * scale {
            break;
        }
        betas.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }

    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let top = (0..k).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap_or(0);
    let value = eig.eigenvalues[top];
    let mut vector = vec![0.0; n];
    for (i, b) in basis.iter().enumerate().take(k) {
        axpy(eig.eigenvectors[(i, top)], b, &mut vector);
    }
    orthogonalize(&mut vector, deflate);
    let nv = norm(&vector);
    if !(nv > 0.0) {
        return Err(Error::Convergence { iterations: *used, residual: f64::INFINITY });
    }
    vector.iter_mut().for_each(|x| *x /= nv);

    m.matvec_into(&vector, &mut w);
    *used += 1;
    axpy(-value, &vector, &mut w);
    Ok(Cycle { value, residual: norm(&w), vector })
}
