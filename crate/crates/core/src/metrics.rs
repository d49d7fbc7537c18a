//! Recovery error up to a global label flip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Labeling, ObservedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// `|misclassified| / n`, at most 1/2.
    pub mismatch_fraction: f64,
    pub exact: bool,
    /// The flip `s` applied to the truth before comparing; +1 on ties.
    pub best_flip: i8,
    /// Vertices where the estimate disagrees with `best_flip * truth`, ascending.
    pub misclassified: Vec<usize>,
}

impl RecoveryReport {
    pub fn mismatch_count(&self) -> usize {
        self.misclassified.len()
    }
}

fn check_lengths(estimate: &Labeling, truth: &Labeling) -> Result<()> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), found: estimate.len() });
    }
    Ok(())
}

pub fn recovery_report(estimate: &Labeling, truth: &Labeling) -> Result<RecoveryReport> {
    check_lengths(estimate, truth)?;
    let n = truth.len();
    let disagree = estimate.iter().zip(truth.iter()).filter(|(e, t)| e != t).count();
    let best_flip: i8 = if disagree <= n - disagree { 1 } else { -1 };
    let misclassified: Vec<usize> = estimate
        .iter()
        .zip(truth.iter())
        .enumerate()
        .filter(|(_, (e, t))| *e != best_flip * t)
        .map(|(i, _)| i)
        .collect();
    let mismatch_fraction = if n == 0 { 0.0 } else { misclassified.len() as f64 / n as f64 };
    Ok(RecoveryReport { mismatch_fraction, exact: misclassified.is_empty(), best_flip, misclassified })
}

/// Largest number of misclassified vertices (under the best flip) among the
/// revealed neighbours of any single vertex.
pub fn neighbor_misclassification_max(graph: &ObservedGraph, estimate: &Labeling, truth: &Labeling) -> Result<usize> {
    check_lengths(estimate, truth)?;
    if truth.len() != graph.n() {
        return Err(Error::LengthMismatch { expected: graph.n(), found: truth.len() });
    }
    let report = recovery_report(estimate, truth)?;
    let mut wrong = vec![false; graph.n()];
    for &v in &report.misclassified {
        wrong[v] = true;
    }
    Ok((0..graph.n()).map(|u| graph.neighbors(u).filter(|&(v, _)| wrong[v]).count()).max().unwrap_or(0))
}
