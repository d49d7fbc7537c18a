use crate::error::{Error, Result};
use crate::model::ObservedGraph;

/// Sparse symmetric matrix with value `1` on present pairs, `-y` on absent
/// pairs and zero elsewhere (including the diagonal). Stored row-compressed
/// with both orientations of every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMatrix {
    n: usize,
    y: f64,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl SignedMatrix {
    pub fn from_graph(graph: &ObservedGraph, y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain(format!("encoding weight must be positive, got {y}")));
        }
        let n = graph.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(2 * graph.revealed_count());
        let mut values = Vec::with_capacity(2 * graph.revealed_count());
        offsets.push(0);
        for u in 0..n {
            for (v, status) in graph.neighbors(u) {
                cols.push(v as u32);
                values.push(if status.is_present() { 1.0 } else { -y });
            }
            offsets.push(cols.len());
        }
        Ok(SignedMatrix { n, y, offsets, cols, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Number of stored nonzeros (twice the number of revealed pairs).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn negated(&self) -> Self {
        SignedMatrix { values: self.values.iter().map(|v| -v).collect(), ..self.clone() }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.offsets[i]..self.offsets[i + 1];
        match self.cols[row.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let row = self.offsets[i]..self.offsets[i + 1];
        self.cols[row.clone()].iter().zip(&self.values[row]).map(|(&c, &v)| (c as usize, v))
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: v.len() });
        }
        let mut out = vec![0.0; self.n];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.offsets[i]..self.offsets[i + 1];
            *o = self.cols[row.clone()].iter().zip(&self.values[row]).map(|(&c, &a)| a * v[c as usize]).sum();
        }
    }
}
