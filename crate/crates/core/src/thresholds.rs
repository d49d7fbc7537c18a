//! Encoding weight, exact-recovery thresholds and the Chernoff–Hellinger
//! divergence of the two per-vertex observation channels.

use crate::error::{Error, Result};

/// Parameters closer than this to a singular configuration are rejected.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Default accuracy of the one-dimensional optimizers, in `x`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Observation rates for a vertex in community 1 (`c1`) and community 2
/// (`c2`): (present to C1, absent to C1, present to C2, absent to C2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    pub c1: [f64; 4],
    pub c2: [f64; 4],
}

impl ChannelPair {
    pub fn new(c1: [f64; 4], c2: [f64; 4]) -> Result<Self> {
        let pair = ChannelPair { c1, c2 };
        pair.check_positive()?;
        Ok(pair)
    }

    /// The channels of the block model: `c1 = (p1, 1-p1, q, 1-q)`,
    /// `c2 = (q, 1-q, p2, 1-p2)`.
    pub fn from_model(p1: f64, p2: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2", p2), ("q", q)] {
            check_probability(name, v)?;
        }
        Ok(ChannelPair { c1: [p1, 1.0 - p1, q, 1.0 - q], c2: [q, 1.0 - q, p2, 1.0 - p2] })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ChannelPair { c1: self.c1.map(|c| c * factor), c2: self.c2.map(|c| c * factor) }
    }

    fn check_positive(&self) -> Result<()> {
        let ok = self.c1.iter().chain(&self.c2).all(|&c| c > 0.0 && c.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("channel entries must be positive and finite: {self:?}")))
        }
    }

    /// `f(x) = sum_i c1_i^x c2_i^(1-x)`.
    pub fn hellinger_sum(&self, x: f64) -> f64 {
        self.c1.iter().zip(&self.c2).map(|(&a, &b)| a.powf(x) * b.powf(1.0 - x)).sum()
    }

    fn hellinger_slope(&self, x: f64) -> f64 {
        self.c1.iter().zip(&self.c2).map(|(&a, &b)| a.powf(x) * b.powf(1.0 - x) * (a / b).ln()).sum()
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (SINGULAR_EPS..=1.0 - SINGULAR_EPS).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} is not inside (0, 1)")))
    }
}

/// Rejects `p`, `q` outside `(0, 1)` or equal to each other.
pub fn check_pair(p: f64, q: f64) -> Result<()> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    if (p - q).abs() <= SINGULAR_EPS {
        return Err(Error::Domain(format!("p = {p} and q = {q} coincide")));
    }
    Ok(())
}

/// Relative weight of an absent versus a present edge,
/// `y = ln((1-q)/(1-p)) / ln(p/q)`. Positive whenever `p != q`.
pub fn encoding_weight(p: f64, q: f64) -> Result<f64> {
    check_pair(p, q)?;
    Ok(((1.0 - q) / (1.0 - p)).ln() / (p / q).ln())
}

/// Exact-recovery threshold of the symmetric model,
/// `2 / ((sqrt p - sqrt q)^2 + (sqrt(1-q) - sqrt(1-p))^2)`.
pub fn threshold_symmetric(p: f64, q: f64) -> Result<f64> {
    check_pair(p, q)?;
    let a = p.sqrt() - q.sqrt();
    let b = (1.0 - q).sqrt() - (1.0 - p).sqrt();
    Ok(2.0 / (a * a + b * b))
}

/// Standard Bernoulli Kullback–Leibler divergence in nats.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln())
}

/// Root of a nondecreasing function on `[0, 1]`, clamped to the endpoints.
fn monotone_root<F: Fn(f64) -> f64>(slope: F, tol: f64) -> f64 {
    if slope(0.0) >= 0.0 {
        return 0.0;
    }
    if slope(1.0) <= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")))
    }
}

/// Minimizes the convex function `f(x) = sum_i c1_i^x c2_i^(1-x)` over
/// `[0, 1]` by bisection on its derivative. Returns `(x_star, f(x_star))`.
/// When the channels coincide `f` is constant and `x_star = 0.5`.
pub fn hellinger_ch_min(pair: &ChannelPair, tol: f64) -> Result<(f64, f64)> {
    pair.check_positive()?;
    check_tol(tol)?;
    if pair.c1 == pair.c2 {
        return Ok((0.5, pair.c1.iter().sum()));
    }
    let x = monotone_root(|x| pair.hellinger_slope(x), tol);
    Ok((x, pair.hellinger_sum(x)))
}

/// Information-theoretic threshold of the general model,
/// `[1 - min_x f(x) / 2]^-1`. Returns also the minimizer.
pub fn threshold_general_with_argmin(p1: f64, p2: f64, q: f64, tol: f64) -> Result<(f64, f64)> {
    let pair = ChannelPair::from_model(p1, p2, q)?;
    if (p1 - q).abs() <= SINGULAR_EPS && (p2 - q).abs() <= SINGULAR_EPS {
        return Err(Error::Domain(format!("p1 = p2 = q = {q}: channels are identical and the threshold is infinite")));
    }
    let (x, value) = hellinger_ch_min(&pair, tol)?;
    let gap = 1.0 - 0.5 * value;
    if gap <= SINGULAR_EPS {
        return Err(Error::Domain("channels are indistinguishable; threshold is infinite".into()));
    }
    Ok((1.0 / gap, x))
}

pub fn threshold_general(p1: f64, p2: f64, q: f64, tol: f64) -> Result<f64> {
    threshold_general_with_argmin(p1, p2, q, tol).map(|(t, _)| t)
}

/// Chernoff–Hellinger divergence
/// `max_x sum_i (x c1_i + (1-x) c2_i - c1_i^x c2_i^(1-x))`.
/// The objective is concave, so the maximizer is the root of its derivative.
pub fn ch_divergence(c1: &[f64; 4], c2: &[f64; 4], tol: f64) -> Result<f64> {
    let pair = ChannelPair::new(*c1, *c2)?;
    check_tol(tol)?;
    if c1 == c2 {
        return Ok(0.0);
    }
    let linear: f64 = c1.iter().zip(c2).map(|(a, b)| a - b).sum();
    let objective =
        |x: f64| -> f64 { c1.iter().zip(c2).map(|(&a, &b)| x * a + (1.0 - x) * b - a.powf(x) * b.powf(1.0 - x)).sum() };
    // The negated derivative is nondecreasing.
    let x = monotone_root(|x| pair.hellinger_slope(x) - linear, tol);
    Ok(objective(x).max(0.0))
}
