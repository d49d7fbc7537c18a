//! Fixtures shared by the benchmarks.

use csbm::model::{sample_graph, sample_labels};
use csbm::{Labeling, ModelParams, ObservedGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub params: ModelParams,
    pub labels: Labeling,
    pub graph: ObservedGraph,
}

/// Symmetric instance with `p = 0.9`, `q = 0.1` at `t = t_mult * 2.5`.
pub fn symmetric_instance(n: usize, t_mult: f64, seed: u64) -> Instance {
    let params = ModelParams::symmetric(n, 0.9, 0.1, 2.5 * t_mult).expect("valid parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = sample_labels(n, &mut rng).expect("n >= 2");
    let graph = sample_graph(&params, &labels, &mut rng).expect("labels match n");
    Instance { params, labels, graph }
}
