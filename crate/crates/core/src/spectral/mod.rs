//! Signed adjacency matrix, its top eigenvectors, and the estimators that
//! threshold them. Also the exact spectrum of the expected matrix given the
//! labels, used to check eigenvector perturbation bounds.

mod lanczos;
mod matrix;

pub use lanczos::{canonical_sign, top_eigenpairs, EigenPair, Eigenpairs, SolverOptions};
pub use matrix::SignedMatrix;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Labeling, ModelParams, ObservedGraph};
use crate::thresholds::{check_pair, encoding_weight, kl_bernoulli};

pub fn build_signed_adjacency(graph: &ObservedGraph, y: f64) -> Result<SignedMatrix> {
    SignedMatrix::from_graph(graph, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub labels: Labeling,
    /// Matrix-vector products spent in the eigensolver.
    pub iterations: usize,
}

/// Signs of the top eigenvector of the signed adjacency matrix encoded with
/// `y(p, q)`; the matrix is negated when `p < q`.
pub fn spectral_estimate<R: Rng + ?Sized>(
    graph: &ObservedGraph,
    p: f64,
    q: f64,
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<SpectralEstimate> {
    let y = encoding_weight(p, q)?;
    let mut m = SignedMatrix::from_graph(graph, y)?;
    if p < q {
        m = m.negated();
    }
    let eig = top_eigenpairs(&m, 1, opts, rng)?;
    Ok(SpectralEstimate {
        labels: Labeling::from_signs(eig.pairs[0].vector.iter().copied()),
        iterations: eig.iterations,
    })
}

/// The two top eigenvectors of the `y`-encoded matrix, shared by every
/// point of a `(r, gamma1, gamma2)` grid.
pub fn top_two<R: Rng + ?Sized>(
    graph: &ObservedGraph,
    y: f64,
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<Eigenpairs> {
    let m = SignedMatrix::from_graph(graph, y)?;
    top_eigenpairs(&m, 2.min(graph.n()), opts, rng)
}

/// `gamma1 u1_i + gamma2 u2_i - r` for every vertex.
pub fn combination_scores(eig: &Eigenpairs, gamma1: f64, gamma2: f64, r: f64) -> Vec<f64> {
    let u1 = &eig.pairs[0].vector;
    match eig.pairs.get(1) {
        Some(p2) => u1.iter().zip(&p2.vector).map(|(a, b)| gamma1 * a + gamma2 * b - r).collect(),
        None => u1.iter().map(|a| gamma1 * a - r).collect(),
    }
}

/// Thresholds a linear combination of the two top eigenvectors:
/// `sign(gamma1 u1_i + gamma2 u2_i - r)` with `sign(0) = +1`.
#[allow(clippy::too_many_arguments)]
pub fn spectral_general<R: Rng + ?Sized>(
    graph: &ObservedGraph,
    y: f64,
    r: f64,
    gamma1: f64,
    gamma2: f64,
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<SpectralEstimate> {
    if gamma1 == 0.0 && gamma2 == 0.0 {
        return Err(Error::InvalidParameter("gamma1 and gamma2 cannot both be zero".into()));
    }
    let eig = top_two(graph, y, opts, rng)?;
    Ok(SpectralEstimate {
        labels: Labeling::from_signs(combination_scores(&eig, gamma1, gamma2, r)),
        iterations: eig.iterations,
    })
}

/// Exact eigen-structure of `E[A | labels]` in the symmetric model.
///
/// The expected matrix is taken with its diagonal filled by the
/// within-community value, so it is exactly the rank-two block matrix and
/// its nonzero spectrum reduces to a 2x2 problem on the block sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedSpectrum {
    pub lambda1_star: f64,
    pub lambda2_star: f64,
    pub u1_star: Vec<f64>,
    pub u2_star: Vec<f64>,
    /// Entry for a pair inside one community.
    pub same_entry: f64,
    /// Entry for a pair across communities.
    pub cross_entry: f64,
}

impl ExpectedSpectrum {
    /// Spectral gap `min(lambda1 - lambda2, |lambda1|)`.
    pub fn gap(&self) -> f64 {
        (self.lambda1_star - self.lambda2_star).min(self.lambda1_star.abs())
    }
}

pub fn expected_matrix_spectrum(params: &ModelParams, labels: &Labeling) -> Result<ExpectedSpectrum> {
    params.validate()?;
    if !params.is_symmetric() {
        return Err(Error::InvalidParameter("expected spectrum requires p1 = p2".into()));
    }
    if labels.len() != params.n {
        return Err(Error::LengthMismatch { expected: params.n, found: labels.len() });
    }
    let (p, q) = (params.p1, params.q);
    check_pair(p, q)?;
    let (n1, n2) = (labels.n1(), labels.n2());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidParameter("both communities must be nonempty".into()));
    }
    let scale = params.alpha() / (p / q).ln();
    let same = scale * kl_bernoulli(p, q)?;
    let cross = -scale * kl_bernoulli(q, p)?;

    // On vectors constant per community the block matrix acts as
    // [[n1 a, n2 b], [n1 b, n2 a]]; rescaling by sqrt(n_i) symmetrizes it.
    let (f1, f2) = (n1 as f64, n2 as f64);
    let s11 = f1 * same;
    let s22 = f2 * same;
    let s12 = (f1 * f2).sqrt() * cross;
    let mid = 0.5 * (s11 + s22);
    let rad = (0.25 * (s11 - s22).powi(2) + s12 * s12).sqrt();
    let theta = 0.5 * (2.0 * s12).atan2(s11 - s22);
    let (c, s) = (theta.cos(), theta.sin());
    let expand = |z1: f64, z2: f64| -> Vec<f64> {
        let (x1, x2) = (z1 / f1.sqrt(), z2 / f2.sqrt());
        let mut v: Vec<f64> = labels.iter().map(|l| if l == 1 { x1 } else { x2 }).collect();
        canonical_sign(&mut v);
        v
    };
    Ok(ExpectedSpectrum {
        lambda1_star: mid + rad,
        lambda2_star: mid - rad,
        u1_star: expand(c, s),
        u2_star: expand(-s, c),
        same_entry: same,
        cross_entry: cross,
    })
}

/// `min_s || u - s M u_star / lambda_star ||_inf` over `s = +-1`.
pub fn entrywise_residual(u: &[f64], m: &SignedMatrix, u_star: &[f64], lambda_star: f64) -> Result<f64> {
    if lambda_star == 0.0 || !lambda_star.is_finite() {
        return Err(Error::Domain(format!("lambda_star must be nonzero and finite, got {lambda_star}")));
    }
    if u.len() != m.n() {
        return Err(Error::LengthMismatch { expected: m.n(), found: u.len() });
    }
    let approx = m.matvec(u_star)?;
    let dist = |s: f64| u.iter().zip(&approx).map(|(a, b)| (a - s * b / lambda_star).abs()).fold(0.0, f64::max);
    Ok(dist(1.0).min(dist(-1.0)))
}
