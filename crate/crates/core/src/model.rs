//! The censored two-community block model: parameters, label and graph
//! sampling, and the plain-text graph and label file formats.
//!
//! Every unordered pair `{u, v}` is revealed independently with probability
//! `alpha = min(1, t ln(n) / n)`. A revealed pair is present with probability
//! `p1` (both endpoints labelled +1), `p2` (both -1) or `q` (labels differ),
//! and absent otherwise. Censored pairs are not stored.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this reveal probability the sampler skips over censored pairs with
/// geometric jumps instead of visiting every pair.
const DENSE_SAMPLING_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub t: f64,
}

impl ModelParams {
    pub fn new(n: usize, p1: f64, p2: f64, q: f64, t: f64) -> Result<Self> {
        let params = ModelParams { n, p1, p2, q, t };
        params.validate()?;
        Ok(params)
    }

    pub fn symmetric(n: usize, p: f64, q: f64, t: f64) -> Result<Self> {
        Self::new(n, p, p, q, t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {}", self.n)));
        }
        for (name, value) in [("p1", self.p1), ("p2", self.p2), ("q", self.q)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie strictly inside (0, 1), got {value}")));
            }
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {}", self.t)));
        }
        Ok(())
    }

    /// `t ln(n) / n` before clamping.
    pub fn raw_alpha(&self) -> f64 {
        let n = self.n as f64;
        self.t * n.ln() / n
    }

    /// Reveal probability, clamped to 1.
    pub fn alpha(&self) -> f64 {
        self.raw_alpha().min(1.0)
    }

    pub fn alpha_clamped(&self) -> bool {
        self.raw_alpha() > 1.0
    }

    pub fn is_symmetric(&self) -> bool {
        self.p1 == self.p2
    }

    /// Connection probability for a pair with the given labels.
    pub fn edge_probability(&self, a: i8, b: i8) -> f64 {
        match (a, b) {
            (1, 1) => self.p1,
            (-1, -1) => self.p2,
            _ => self.q,
        }
    }
}

/// An assignment of +1 / -1 community labels to vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Labeling(Vec<i8>);

impl Labeling {
    pub fn new(labels: Vec<i8>) -> Result<Self> {
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l != 1 && l != -1) {
            return Err(Error::InvalidParameter(format!("label {l} at vertex {i} is not +1 or -1")));
        }
        Ok(Labeling(labels))
    }

    pub fn all(n: usize, label: i8) -> Self {
        assert!(label == 1 || label == -1);
        Labeling(vec![label; n])
    }

    /// Builds a labeling from real scores with `sign(0) = +1`.
    pub fn from_signs<I: IntoIterator<Item = f64>>(scores: I) -> Self {
        Labeling(scores.into_iter().map(|s| if s >= 0.0 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, label: i8) {
        assert!(label == 1 || label == -1);
        self.0[i] = label;
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = i8> + '_ {
        self.0.iter().copied()
    }

    /// Size of community 1 (label +1).
    pub fn n1(&self) -> usize {
        self.0.iter().filter(|&&l| l == 1).count()
    }

    /// Size of community 2 (label -1).
    pub fn n2(&self) -> usize {
        self.len() - self.n1()
    }

    pub fn flipped(&self) -> Self {
        Labeling(self.0.iter().map(|&l| -l).collect())
    }

    /// Relabels vertices: vertex `i` of the result carries the label of
    /// vertex `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Labeling(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<i8>> for Labeling {
    type Error = Error;

    fn try_from(labels: Vec<i8>) -> Result<Self> {
        Labeling::new(labels)
    }
}

impl From<Labeling> for Vec<i8> {
    fn from(labeling: Labeling) -> Self {
        labeling.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Present,
    Absent,
}

impl Status {
    pub fn is_present(self) -> bool {
        self == Status::Present
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RevealedPair {
    pub u: usize,
    pub v: usize,
    pub present: bool,
}

impl RevealedPair {
    pub fn status(&self) -> Status {
        if self.present {
            Status::Present
        } else {
            Status::Absent
        }
    }
}

/// The revealed part of a sampled graph, stored as a sorted pair list plus a
/// compressed per-vertex adjacency index over all revealed pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedGraph {
    n: usize,
    // sorted by (u, v), u < v
    pairs: Vec<RevealedPair>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    present: Vec<bool>,
}

impl ObservedGraph {
    /// Builds a graph from revealed pairs given in any orientation and order.
    /// Self-pairs, duplicates and out-of-range vertices are rejected.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Status)>,
    {
        let mut list = Vec::new();
        for (a, b, status) in pairs {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self-pair at vertex {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            list.push(RevealedPair { u, v, present: status.is_present() });
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::InvalidParameter(format!("duplicate pair {{{}, {}}}", w[0].u, w[0].v)));
        }
        Ok(Self::from_sorted(n, list))
    }

    fn from_sorted(n: usize, pairs: Vec<RevealedPair>) -> Self {
        assert!(n <= u32::MAX as usize);
        let mut degree = vec![0usize; n + 1];
        for p in &pairs {
            degree[p.u] += 1;
            degree[p.v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for d in &degree[..n] {
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; acc];
        let mut present = vec![false; acc];
        // Pairs are sorted by (u, v); emitting both endpoints in this order
        // leaves every adjacency row sorted by neighbor id.
        for p in &pairs {
            neighbors[fill[p.u]] = p.v as u32;
            present[fill[p.u]] = p.present;
            fill[p.u] += 1;
        }
        for p in &pairs {
            neighbors[fill[p.v]] = p.u as u32;
            present[fill[p.v]] = p.present;
            fill[p.v] += 1;
        }
        for u in 0..n {
            let row = offsets[u]..offsets[u + 1];
            if !neighbors[row.clone()].windows(2).all(|w| w[0] < w[1]) {
                let mut idx: Vec<usize> = row.clone().collect();
                idx.sort_by_key(|&i| neighbors[i]);
                let nb: Vec<u32> = idx.iter().map(|&i| neighbors[i]).collect();
                let pr: Vec<bool> = idx.iter().map(|&i| present[i]).collect();
                neighbors[row.clone()].copy_from_slice(&nb);
                present[row].copy_from_slice(&pr);
            }
        }
        ObservedGraph { n, pairs, offsets, neighbors, present }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[RevealedPair] {
        &self.pairs
    }

    pub fn revealed_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn present_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.present).count()
    }

    /// Revealed neighbors of `u` with their status, sorted by neighbor id.
    pub fn neighbors(&self, u: usize) -> impl ExactSizeIterator<Item = (usize, Status)> + '_ {
        let row = self.offsets[u]..self.offsets[u + 1];
        self.neighbors[row.clone()]
            .iter()
            .zip(&self.present[row])
            .map(|(&v, &p)| (v as usize, if p { Status::Present } else { Status::Absent }))
    }

    /// Number of revealed pairs at `u`, i.e. `|N(u)|`.
    pub fn revealed_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Number of present pairs at `u`.
    pub fn present_degree(&self, u: usize) -> usize {
        self.present[self.offsets[u]..self.offsets[u + 1]].iter().filter(|&&p| p).count()
    }

    /// Sorted ids of the present neighbors of `u`.
    pub fn present_neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors(u).filter(|(_, s)| s.is_present()).map(|(v, _)| v)
    }

    /// Applies a vertex relabeling: old vertex `perm[i]` becomes vertex `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: perm.len() });
        }
        let mut inverse = vec![usize::MAX; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        Self::from_pairs(self.n, self.pairs.iter().map(|p| (inverse[p.u], inverse[p.v], p.status())))
    }
}

/// Draws independent fair +1 / -1 labels.
pub fn sample_labels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Labeling> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    Ok(Labeling((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()))
}

/// Samples the revealed pairs and their statuses for the given labels.
pub fn sample_graph<R: Rng + ?Sized>(params: &ModelParams, labels: &Labeling, rng: &mut R) -> Result<ObservedGraph> {
    params.validate()?;
    if labels.len() != params.n {
        return Err(Error::LengthMismatch { expected: params.n, found: labels.len() });
    }
    let n = params.n;
    let alpha = params.alpha();
    let mut pairs = Vec::new();
    let mut emit = |u: usize, v: usize, rng: &mut R| {
        let p = params.edge_probability(labels.get(u), labels.get(v));
        pairs.push(RevealedPair { u, v, present: rng.random::<f64>() < p });
    };

    if alpha >= 1.0 {
        for u in 0..n {
            for v in u + 1..n {
                emit(u, v, rng);
            }
        }
    } else if alpha > DENSE_SAMPLING_ALPHA {
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < alpha {
                    emit(u, v, rng);
                }
            }
        }
    } else {
        // Walk the pairs in row-major order, jumping over runs of censored
        // pairs whose lengths are geometric.
        let skip = Geometric::new(alpha).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let (mut u, mut v) = (0usize, 0usize);
        loop {
            let mut jump = skip.sample(rng) + 1;
            // advance (u, v) by `jump` positions in the pair order
            while u < n {
                let remaining = (n - 1 - v) as u64;
                if jump <= remaining {
                    v += jump as usize;
                    break;
                }
                jump -= remaining;
                u += 1;
                v = u;
            }
            if u + 1 >= n {
                break;
            }
            emit(u, v, rng);
        }
    }
    Ok(ObservedGraph::from_sorted(n, pairs))
}

pub fn write_graph<W: Write>(graph: &ObservedGraph, mut sink: W) -> Result<()> {
    writeln!(sink, "n {}", graph.n)?;
    for p in &graph.pairs {
        writeln!(sink, "{} {} {}", p.u, p.v, u8::from(p.present))?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_graph<R: BufRead>(source: R) -> Result<ObservedGraph> {
    let mut n = None;
    let mut pairs: Vec<RevealedPair> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(n) = n else {
            match fields.as_slice() {
                ["n", count] => {
                    let count: usize = count.parse().map_err(|_| parse_err(format!("bad vertex count {count:?}")))?;
                    n = Some(count);
                    continue;
                }
                _ => return Err(parse_err("expected header `n <count>`".into())),
            }
        };
        let [u, v, s] = fields.as_slice() else {
            return Err(parse_err(format!("expected `u v s`, found {line:?}")));
        };
        let u: usize = u.parse().map_err(|_| parse_err(format!("bad vertex id {u:?}")))?;
        let v: usize = v.parse().map_err(|_| parse_err(format!("bad vertex id {v:?}")))?;
        let present = match *s {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(format!("status must be 0 or 1, found {other:?}"))),
        };
        if u >= n || v >= n {
            return Err(parse_err(format!("vertex id {} out of range for n = {n}", u.max(v))));
        }
        if u == v {
            return Err(parse_err(format!("self-pair at vertex {u}")));
        }
        if u > v {
            return Err(parse_err(format!("pair must be written with u < v, found {u} {v}")));
        }
        pairs.push(RevealedPair { u, v, present });
        // written files are sorted, so duplicates are adjacent in the common case
        if pairs.len() >= 2 {
            let prev = pairs[pairs.len() - 2];
            if (prev.u, prev.v) == (u, v) {
                return Err(parse_err(format!("duplicate pair {u} {v}")));
            }
        }
    }
    let n = n.ok_or(Error::Parse { line: 1, message: "missing header `n <count>`".into() })?;
    let sorted = pairs.windows(2).all(|w| (w[0].u, w[0].v) < (w[1].u, w[1].v));
    if !sorted {
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::Parse { line: 0, message: format!("duplicate pair {} {}", w[0].u, w[0].v) });
        }
    }
    Ok(ObservedGraph::from_sorted(n, pairs))
}

pub fn write_labels<W: Write>(labels: &Labeling, mut sink: W) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        writeln!(sink, "{i} {}", if l == 1 { "+1" } else { "-1" })?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a label file; vertex ids must be exactly `0..n` in some order.
pub fn read_labels<R: BufRead>(source: R) -> Result<Labeling> {
    let mut entries: Vec<(usize, i8, usize)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let [i, l] = line.split_whitespace().collect::<Vec<_>>()[..] else {
            return Err(parse_err(format!("expected `i l`, found {line:?}")));
        };
        let i: usize = i.parse().map_err(|_| parse_err(format!("bad vertex id {i:?}")))?;
        let l = match l {
            "+1" | "1" => 1,
            "-1" => -1,
            other => return Err(parse_err(format!("label must be +1 or -1, found {other:?}"))),
        };
        entries.push((i, l, line_no));
    }
    let n = entries.len();
    let mut labels = vec![0i8; n];
    for (i, l, line) in entries {
        if i >= n {
            return Err(Error::Parse { line, message: format!("vertex id {i} out of range for {n} labels") });
        }
        if labels[i] != 0 {
            return Err(Error::Parse { line, message: format!("duplicate label for vertex {i}") });
        }
        labels[i] = l;
    }
    Labeling::new(labels)
}
