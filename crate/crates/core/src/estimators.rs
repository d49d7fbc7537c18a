//! Likelihood-based estimators built on per-vertex degree profiles.
//!
//! The log-likelihood ratio between labeling a vertex +1 and -1, with every
//! other label held fixed, is a linear function of its degree profile (the
//! score `gamma`). The genie estimator takes its sign under the true labels;
//! the two-step estimator takes it under an initial estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Labeling, ModelParams, ObservedGraph, Status};

/// Largest instance accepted by [`map_exhaustive`].
pub const MAP_MAX_VERTICES: usize = 20;

/// Revealed pairs of a vertex split by status and by the label of the other
/// endpoint: `d1`/`d2` present/absent to community 1 (+1), `d3`/`d4`
/// present/absent to community 2 (-1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
    pub d4: usize,
}

impl DegreeProfile {
    pub fn total(&self) -> usize {
        self.d1 + self.d2 + self.d3 + self.d4
    }
}

fn check_len(labels: &Labeling, n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: labels.len() });
    }
    Ok(())
}

pub fn degree_profile(graph: &ObservedGraph, sigma: &Labeling, u: usize) -> Result<DegreeProfile> {
    check_len(sigma, graph.n())?;
    if u >= graph.n() {
        return Err(Error::VertexOutOfRange { vertex: u, n: graph.n() });
    }
    Ok(profile_unchecked(graph, sigma, u))
}

fn profile_unchecked(graph: &ObservedGraph, sigma: &Labeling, u: usize) -> DegreeProfile {
    let mut d = DegreeProfile::default();
    for (v, status) in graph.neighbors(u) {
        match (sigma.get(v), status) {
            (1, Status::Present) => d.d1 += 1,
            (1, Status::Absent) => d.d2 += 1,
            (_, Status::Present) => d.d3 += 1,
            (_, Status::Absent) => d.d4 += 1,
        }
    }
    d
}

/// The four log-ratio coefficients of the score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaWeights([f64; 4]);

impl GammaWeights {
    pub fn new(p1: f64, p2: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2", p2), ("q", q)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain(format!("{name} = {v} is not inside (0, 1)")));
            }
        }
        Ok(GammaWeights([(p1 / q).ln(), ((1.0 - p1) / (1.0 - q)).ln(), (q / p2).ln(), ((1.0 - q) / (1.0 - p2)).ln()]))
    }

    pub fn from_params(params: &ModelParams) -> Result<Self> {
        Self::new(params.p1, params.p2, params.q)
    }

    pub fn score(&self, d: &DegreeProfile) -> f64 {
        let w = &self.0;
        d.d1 as f64 * w[0] + d.d2 as f64 * w[1] + d.d3 as f64 * w[2] + d.d4 as f64 * w[3]
    }
}

/// `d1 ln(p1/q) + d2 ln((1-p1)/(1-q)) + d3 ln(q/p2) + d4 ln((1-q)/(1-p2))`.
pub fn gamma_score(profile: &DegreeProfile, p1: f64, p2: f64, q: f64) -> Result<f64> {
    Ok(GammaWeights::new(p1, p2, q)?.score(profile))
}

/// One refinement pass: every vertex is relabelled by the sign of its score
/// against the frozen `initial` labels (`>= 0` gives +1).
pub fn two_step_refine(graph: &ObservedGraph, initial: &Labeling, params: &ModelParams) -> Result<Labeling> {
    check_len(initial, graph.n())?;
    let weights = GammaWeights::from_params(params)?;
    Ok(Labeling::from_signs((0..graph.n()).map(|u| weights.score(&profile_unchecked(graph, initial, u)))))
}

/// Repeats [`two_step_refine`] `rounds` times, each pass refining the
/// previous output. `rounds = 1` is the plain two-step estimator.
pub fn two_step_refine_iterated(
    graph: &ObservedGraph,
    initial: &Labeling,
    params: &ModelParams,
    rounds: usize,
) -> Result<Labeling> {
    let mut current = initial.clone();
    for _ in 0..rounds {
        current = two_step_refine(graph, &current, params)?;
    }
    check_len(&current, graph.n())?;
    Ok(current)
}

/// Per-vertex optimal decision given all other true labels.
pub fn genie_estimate(graph: &ObservedGraph, true_labels: &Labeling, params: &ModelParams) -> Result<Labeling> {
    two_step_refine(graph, true_labels, params)
}

/// `+1` iff the number of present pairs at a vertex is at least
/// `t ln(n) (p1 + p2 + 2q) / 4`.
pub fn degree_estimate(graph: &ObservedGraph, params: &ModelParams) -> Result<Labeling> {
    params.validate()?;
    if graph.n() != params.n {
        return Err(Error::LengthMismatch { expected: params.n, found: graph.n() });
    }
    let threshold = params.t * (params.n as f64).ln() * (params.p1 + params.p2 + 2.0 * params.q) / 4.0;
    Ok(Labeling::from_signs((0..graph.n()).map(|u| graph.present_degree(u) as f64 - threshold)))
}

fn pair_kind(a: i8, b: i8) -> usize {
    match (a, b) {
        (1, 1) => 0,
        (-1, -1) => 1,
        _ => 2,
    }
}

/// Log-probabilities of a revealed pair's status by pair kind, with the
/// label-independent reveal factors dropped.
fn status_log_rates(params: &ModelParams) -> Result<[[f64; 2]; 3]> {
    params.validate()?;
    let rates = [params.p1, params.p2, params.q];
    Ok(rates.map(|p| [p.ln(), (1.0 - p).ln()]))
}

/// Log-likelihood of the revealed statuses under `sigma`, up to an additive
/// constant that does not depend on the labels.
pub fn log_likelihood(graph: &ObservedGraph, sigma: &Labeling, params: &ModelParams) -> Result<f64> {
    check_len(sigma, graph.n())?;
    let rates = status_log_rates(params)?;
    Ok(graph.pairs().iter().map(|p| rates[pair_kind(sigma.get(p.u), sigma.get(p.v))][usize::from(!p.present)]).sum())
}

/// Evaluates the likelihood from per-(kind, status) pair counts. Slots with
/// bit-identical log-rates are merged before summation, so labelings that
/// are tied in exact arithmetic also tie in floating point.
struct CountLikelihood {
    groups: Vec<(f64, Vec<usize>)>,
}

impl CountLikelihood {
    fn new(rates: &[[f64; 2]; 3]) -> Self {
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for slot in 0..6 {
            let w = rates[slot / 2][slot % 2];
            match groups.iter_mut().find(|(gw, _)| gw.to_bits() == w.to_bits()) {
                Some((_, slots)) => slots.push(slot),
                None => groups.push((w, vec![slot])),
            }
        }
        CountLikelihood { groups }
    }

    fn eval(&self, counts: &[i64; 6]) -> f64 {
        self.groups.iter().map(|(w, slots)| w * slots.iter().map(|&s| counts[s]).sum::<i64>() as f64).sum()
    }
}

/// Exhaustive maximum-likelihood labeling for small graphs.
///
/// In the symmetric model the likelihood is invariant under a global flip,
/// so vertex 0 is fixed to +1 and `2^(n-1)` labelings are searched. With
/// `p1 != p2` the flip changes the likelihood and all `2^n` are searched.
/// Among labelings with equal likelihood the lexicographically smallest is
/// returned, ordering `-1 < +1`.
pub fn map_exhaustive(graph: &ObservedGraph, params: &ModelParams) -> Result<Labeling> {
    let n = graph.n();
    if n > MAP_MAX_VERTICES {
        return Err(Error::Size(format!("exhaustive search needs n <= {MAP_MAX_VERTICES}, got {n}")));
    }
    if n == 0 {
        return Ok(Labeling::all(0, 1));
    }
    let rates = status_log_rates(params)?;
    let lik = CountLikelihood::new(&rates);

    let mut sigma = vec![1i8; n];
    let mut counts = [0i64; 6];
    for p in graph.pairs() {
        counts[2 * pair_kind(sigma[p.u], sigma[p.v]) + usize::from(!p.present)] += 1;
    }
    let mut best_ll = lik.eval(&counts);
    let mut best = sigma.clone();

    // Gray-code walk over the free vertices; each step flips one label and
    // updates the pair counts along that vertex's revealed pairs.
    let first_free = usize::from(params.is_symmetric());
    let total: u64 = 1 << (n - first_free);
    for k in 1..total {
        let u = k.trailing_zeros() as usize + first_free;
        for (v, status) in graph.neighbors(u) {
            let s = usize::from(!status.is_present());
            counts[2 * pair_kind(sigma[u], sigma[v]) + s] -= 1;
            counts[2 * pair_kind(-sigma[u], sigma[v]) + s] += 1;
        }
        sigma[u] = -sigma[u];
        let ll = lik.eval(&counts);
        if ll > best_ll || (ll == best_ll && sigma < best) {
            best_ll = ll;
            best.copy_from_slice(&sigma);
        }
    }
    Labeling::new(best)
}

/// Number of triangles whose three pairs are all revealed and present.
pub fn count_triangles(graph: &ObservedGraph) -> u64 {
    let n = graph.n();
    let present: Vec<Vec<usize>> = (0..n).map(|u| graph.present_neighbors(u).collect()).collect();
    let mut count = 0u64;
    for u in 0..n {
        for &v in present[u].iter().filter(|&&v| v > u) {
            // sorted-merge intersection restricted to w > v
            let (a, b) = (&present[u], &present[v]);
            let (mut i, mut j) = (a.partition_point(|&w| w <= v), b.partition_point(|&w| w <= v));
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        count += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub p_hat: f64,
    pub q_hat: f64,
    pub edges: u64,
    pub triangles: u64,
}

/// Method-of-moments estimate of `(p, q)` in the symmetric model with known
/// `t`, from the present-edge and present-triangle counts.
pub fn estimate_parameters(graph: &ObservedGraph, t: f64) -> Result<ParameterEstimate> {
    let edges = graph.present_count() as u64;
    if edges == 0 {
        return Err(Error::Estimation("graph has no present pairs".into()));
    }
    let triangles = count_triangles(graph);
    let (p_hat, q_hat) = estimate_from_counts(graph.n(), t, edges as f64, triangles as f64)?;
    Ok(ParameterEstimate { p_hat, q_hat, edges, triangles })
}

/// Solves `E = t n ln(n) (p + q) / 4` and
/// `T = t^3 ln^3(n) (p q^2 + p^3 / 3) / 8` for `(p, q)`.
///
/// With `s = p + q` the second equation becomes `g(p) = p (s - p)^2 + p^3/3`,
/// and `g'(p) = (s - 2p)^2 >= 0`, so `g` is increasing and the root on the
/// feasible interval is unique.
pub fn estimate_from_counts(n: usize, t: f64, edges: f64, triangles: f64) -> Result<(f64, f64)> {
    if n < 2 || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("need n >= 2 and t > 0, got n = {n}, t = {t}")));
    }
    let log_n = (n as f64).ln();
    let s = 4.0 * edges / (t * n as f64 * log_n);
    if !(s > 0.0 && s < 2.0) {
        return Err(Error::Estimation(format!("implied p + q = {s} is outside (0, 2)")));
    }
    let target = 8.0 * triangles / (t * log_n).powi(3);
    if triangles == 0.0 {
        return Err(Error::Estimation("no present triangles; cannot separate p from q".into()));
    }
    let g = |p: f64| p * (s - p).powi(2) + p.powi(3) / 3.0;
    let (mut lo, mut hi) = ((s - 1.0).max(0.0), s.min(1.0));
    if !(g(lo) < target && target < g(hi)) {
        return Err(Error::Estimation(format!(
            "triangle density {target} is outside the feasible range ({}, {}) for p + q = {s}",
            g(lo),
            g(hi)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    Ok((p, s - p))
}
