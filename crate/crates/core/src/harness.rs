//! Seeded Monte Carlo sweeps over model parameters.
//!
//! A sweep is the cartesian product of the parameter lists (in the order
//! `n, p1, p2, q, t`) times a number of trials. Each trial draws its own seed
//! from `(master_seed, cell, trial)`, so the output does not depend on how
//! trials are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{degree_estimate, genie_estimate, map_exhaustive, two_step_refine, MAP_MAX_VERTICES};
use crate::metrics::recovery_report;
use crate::model::{sample_graph, sample_labels, Labeling, ModelParams, ObservedGraph};
use crate::spectral::{spectral_estimate, spectral_general, SolverOptions};
use crate::thresholds::{threshold_general, DEFAULT_TOL};

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 13] = [
    "n",
    "p1",
    "p2",
    "q",
    "t",
    "t_over_tc",
    "trial",
    "seed",
    "method",
    "mismatch_fraction",
    "exact",
    "wall_ms",
    "note",
];

/// A `t` grid entry: either used as is or multiplied by the cell's `t_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TValue {
    Absolute(f64),
    TimesTc(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Top eigenvector of the signed adjacency matrix. In asymmetric cells
    /// the encoding uses `p = (p1 + p2) / 2`.
    Spectral,
    Degree,
    Genie,
    TwoStepSpectral,
    TwoStepDegree,
    SpectralGeneral {
        y: f64,
        r: f64,
        gamma1: f64,
        gamma2: f64,
    },
    Map,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Spectral => "spectral".into(),
            Method::Degree => "degree".into(),
            Method::Genie => "genie".into(),
            Method::TwoStepSpectral => "two-step-spectral".into(),
            Method::TwoStepDegree => "two-step-degree".into(),
            Method::SpectralGeneral { y, r, gamma1, gamma2 } => {
                format!("spectral-general(y={y},r={r},g1={gamma1},g2={gamma2})")
            }
            Method::Map => "map".into(),
        }
    }

    /// RNG stream for the eigensolver's start vector. The two spectral
    /// variants share a stream so that two-step refines the same estimate.
    fn stream(&self) -> u64 {
        match self {
            Method::Spectral | Method::TwoStepSpectral => 1,
            Method::SpectralGeneral { .. } => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: Vec<usize>,
    pub p1: Vec<f64>,
    /// Omitted means `p2 = p1` in every cell (the symmetric model).
    #[serde(default)]
    pub p2: Option<Vec<f64>>,
    pub q: Vec<f64>,
    pub t: Vec<TValue>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("invalid sweep config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n.is_empty() || self.p1.is_empty() || self.q.is_empty() || self.t.is_empty() {
            return bad("n, p1, q and t lists must be non-empty".into());
        }
        if self.p2.as_ref().is_some_and(Vec::is_empty) {
            return bad("p2 list must be non-empty when given".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < 2) {
            return bad(format!("n must be at least 2, got {n}"));
        }
        let probabilities = self.p1.iter().chain(self.p2.iter().flatten()).chain(&self.q);
        if let Some(p) = probabilities.copied().find(|p| !(*p > 0.0 && *p < 1.0)) {
            return bad(format!("probability {p} is not inside (0, 1)"));
        }
        for t in &self.t {
            let (TValue::Absolute(v) | TValue::TimesTc(v)) = *t;
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("t entries must be positive, got {v}"));
            }
        }
        if self.methods.contains(&Method::Map) && self.n.iter().any(|&n| n > MAP_MAX_VERTICES) {
            return bad(format!("map requires every n <= {MAP_MAX_VERTICES}"));
        }
        for m in &self.methods {
            if let Method::SpectralGeneral { y, gamma1, gamma2, r } = *m {
                if !(y > 0.0 && y.is_finite()) || !r.is_finite() || (gamma1 == 0.0 && gamma2 == 0.0) {
                    return bad(format!("invalid spectral-general parameters in {m}"));
                }
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.krylov_dim < 2 {
            return bad("solver needs tol > 0 and krylov_dim >= 2".into());
        }
        Ok(())
    }
}

/// A fully resolved parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub params: ModelParams,
    /// `None` when the threshold is infinite for this `(p1, p2, q)`.
    pub t_c: Option<f64>,
}

impl Cell {
    pub fn new(index: usize, params: ModelParams) -> Self {
        let t_c = threshold_general(params.p1, params.p2, params.q, DEFAULT_TOL).ok();
        Cell { index, params, t_c }
    }

    pub fn t_over_tc(&self) -> Option<f64> {
        self.t_c.map(|tc| self.params.t / tc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub index: usize,
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub reason: String,
}

/// Expands the grid in `n, p1, p2, q, t` order. Cells whose `t` cannot be
/// resolved are returned separately with the reason.
pub fn resolve_cells(config: &SweepConfig) -> Result<(Vec<Cell>, Vec<SkippedCell>)> {
    config.validate()?;
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    let mut index = 0;
    for &n in &config.n {
        for &p1 in &config.p1 {
            let p2_list = config.p2.clone().unwrap_or_else(|| vec![p1]);
            for &p2 in &p2_list {
                for &q in &config.q {
                    let t_c = threshold_general(p1, p2, q, DEFAULT_TOL);
                    for &t in &config.t {
                        let resolved = match (t, &t_c) {
                            (TValue::Absolute(v), _) => Ok(v),
                            (TValue::TimesTc(k), Ok(tc)) => Ok(k * tc),
                            (TValue::TimesTc(_), Err(e)) => Err(format!("t_c unavailable: {e}")),
                        };
                        match resolved {
                            Ok(t) => cells.push(Cell::new(index, ModelParams::new(n, p1, p2, q, t)?)),
                            Err(reason) => skipped.push(SkippedCell { index, n, p1, p2, q, reason }),
                        }
                        index += 1;
                    }
                }
            }
        }
    }
    Ok((cells, skipped))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)`.
pub fn derive_seed(master_seed: u64, cell_index: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ cell_index) ^ trial_index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: String,
    pub mismatch_fraction: Option<f64>,
    pub mismatch_count: Option<usize>,
    pub exact: Option<bool>,
    pub wall_ms: f64,
    /// Eigensolver matrix-vector products, for the spectral methods.
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub t: f64,
    pub t_over_tc: Option<f64>,
    pub alpha_clamped: bool,
    pub trial: usize,
    pub seed: u64,
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialRecord {
    /// The record with wall-clock times zeroed, for comparing runs.
    pub fn deterministic_view(&self) -> TrialRecord {
        let mut r = self.clone();
        for o in &mut r.outcomes {
            o.wall_ms = 0.0;
        }
        r
    }

    pub fn has_failures(&self) -> bool {
        self.outcomes.iter().any(|o| o.error.is_some())
    }
}

fn run_method(
    method: &Method,
    params: &ModelParams,
    graph: &ObservedGraph,
    truth: &Labeling,
    solver: &SolverOptions,
    seed: u64,
) -> Result<(Labeling, Option<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(method.stream());
    let spectral =
        |rng: &mut ChaCha8Rng| spectral_estimate(graph, 0.5 * (params.p1 + params.p2), params.q, solver, rng);
    Ok(match *method {
        Method::Spectral => {
            let est = spectral(&mut rng)?;
            (est.labels, Some(est.iterations))
        }
        Method::Degree => (degree_estimate(graph, params)?, None),
        Method::Genie => (genie_estimate(graph, truth, params)?, None),
        Method::TwoStepSpectral => {
            let est = spectral(&mut rng)?;
            (two_step_refine(graph, &est.labels, params)?, Some(est.iterations))
        }
        Method::TwoStepDegree => (two_step_refine(graph, &degree_estimate(graph, params)?, params)?, None),
        Method::SpectralGeneral { y, r, gamma1, gamma2 } => {
            let est = spectral_general(graph, y, r, gamma1, gamma2, solver, &mut rng)?;
            (est.labels, Some(est.iterations))
        }
        Method::Map => (map_exhaustive(graph, params)?, None),
    })
}

/// Samples one instance from `seed` and runs every method on it. Method
/// failures are stored in the outcome rather than returned.
pub fn run_trial(cell: &Cell, trial: usize, methods: &[Method], seed: u64, solver: &SolverOptions) -> TrialRecord {
    let params = &cell.params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled = sample_labels(params.n, &mut rng)
        .and_then(|labels| sample_graph(params, &labels, &mut rng).map(|g| (labels, g)));
    let outcomes = methods
        .iter()
        .map(|method| {
            let start = Instant::now();
            let result = sampled.as_ref().map_err(|e| e.to_string()).and_then(|(truth, graph)| {
                run_method(method, params, graph, truth, solver, seed)
                    .and_then(|(est, iters)| Ok((recovery_report(&est, truth)?, iters)))
                    .map_err(|e| e.to_string())
            });
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            match result {
                Ok((report, iterations)) => MethodOutcome {
                    method: method.label(),
                    mismatch_fraction: Some(report.mismatch_fraction),
                    mismatch_count: Some(report.mismatch_count()),
                    exact: Some(report.exact),
                    wall_ms,
                    iterations,
                    error: None,
                },
                Err(e) => MethodOutcome {
                    method: method.label(),
                    mismatch_fraction: None,
                    mismatch_count: None,
                    exact: None,
                    wall_ms,
                    iterations: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    TrialRecord {
        cell: cell.index,
        n: params.n,
        p1: params.p1,
        p2: params.p2,
        q: params.q,
        t: params.t,
        t_over_tc: cell.t_over_tc(),
        alpha_clamped: params.alpha_clamped(),
        trial,
        seed,
        outcomes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    /// Ordered by cell, then trial.
    pub records: Vec<TrialRecord>,
    pub skipped: Vec<SkippedCell>,
}

impl SweepOutput {
    pub fn has_failures(&self) -> bool {
        !self.skipped.is_empty() || self.records.iter().any(TrialRecord::has_failures)
    }
}

/// Runs every cell and trial on a pool of `parallelism` threads.
pub fn run_sweep(config: &SweepConfig, parallelism: usize) -> Result<SweepOutput> {
    if parallelism == 0 {
        return Err(Error::InvalidParameter("parallelism must be positive".into()));
    }
    let (cells, skipped) = resolve_cells(config)?;
    let jobs: Vec<(&Cell, usize)> =
        cells.iter().flat_map(|c| (0..config.trials).map(move |trial| (c, trial))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
    let records = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, trial)| {
                let seed = derive_seed(config.master_seed, cell.index as u64, trial as u64);
                run_trial(cell, trial, &config.methods, seed, &config.solver)
            })
            .collect()
    });
    Ok(SweepOutput { records, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" => Ok(OutputFormat::Jsonl),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}, expected csv or jsonl"))),
        }
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    n: usize,
    p1: f64,
    p2: f64,
    q: f64,
    t: f64,
    t_over_tc: Option<f64>,
    trial: usize,
    seed: u64,
    method: &'a str,
    mismatch_fraction: Option<f64>,
    exact: Option<bool>,
    wall_ms: f64,
    note: String,
}

/// One flattened `(record, method)` row of the JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonRow {
    pub cell: usize,
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub t: f64,
    pub t_over_tc: Option<f64>,
    pub alpha_clamped: bool,
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: MethodOutcome,
}

fn note(record: &TrialRecord, outcome: &MethodOutcome) -> String {
    let mut parts = Vec::new();
    if record.alpha_clamped {
        parts.push("alpha clamped to 1".to_string());
    }
    if let Some(e) = &outcome.error {
        parts.push(format!("error: {e}"));
    }
    parts.join("; ")
}

/// Writes one row per `(record, method)`.
pub fn emit_results<W: Write>(records: &[TrialRecord], sink: W, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
            w.write_record(CSV_COLUMNS)?;
            for r in records {
                for o in &r.outcomes {
                    w.serialize(CsvRow {
                        n: r.n,
                        p1: r.p1,
                        p2: r.p2,
                        q: r.q,
                        t: r.t,
                        t_over_tc: r.t_over_tc,
                        trial: r.trial,
                        seed: r.seed,
                        method: &o.method,
                        mismatch_fraction: o.mismatch_fraction,
                        exact: o.exact,
                        wall_ms: o.wall_ms,
                        note: note(r, o),
                    })?;
                }
            }
            w.flush()?;
        }
        OutputFormat::Jsonl => {
            let mut sink = sink;
            for r in records {
                for o in &r.outcomes {
                    let row = JsonRow {
                        cell: r.cell,
                        n: r.n,
                        p1: r.p1,
                        p2: r.p2,
                        q: r.q,
                        t: r.t,
                        t_over_tc: r.t_over_tc,
                        alpha_clamped: r.alpha_clamped,
                        trial: r.trial,
                        seed: r.seed,
                        outcome: o.clone(),
                    };
                    serde_json::to_writer(&mut sink, &row)?;
                    sink.write_all(b"\n")?;
                }
            }
            sink.flush()?;
        }
    }
    Ok(())
}

/// Reads JSON-lines output back into records, merging consecutive rows of
/// the same `(cell, trial)`.
pub fn read_jsonl<R: BufRead>(source: R) -> Result<Vec<TrialRecord>> {
    let mut records: Vec<TrialRecord> = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        match records.last_mut() {
            Some(last) if last.cell == row.cell && last.trial == row.trial => last.outcomes.push(row.outcome),
            _ => records.push(TrialRecord {
                cell: row.cell,
                n: row.n,
                p1: row.p1,
                p2: row.p2,
                q: row.q,
                t: row.t,
                t_over_tc: row.t_over_tc,
                alpha_clamped: row.alpha_clamped,
                trial: row.trial,
                seed: row.seed,
                outcomes: vec![row.outcome],
            }),
        }
    }
    Ok(records)
}

/// Per-(cell, method) aggregate over trials: one point of a phase diagram
/// or of an error-scaling curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub cell: usize,
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub t: f64,
    pub t_over_tc: Option<f64>,
    pub method: String,
    pub trials: usize,
    pub failures: usize,
    pub exact_rate: f64,
    pub mean_mismatch_fraction: f64,
}

pub fn summarize(records: &[TrialRecord]) -> Vec<MethodSummary> {
    let mut groups: BTreeMap<(usize, String), MethodSummary> = BTreeMap::new();
    for r in records {
        for o in &r.outcomes {
            let s = groups.entry((r.cell, o.method.clone())).or_insert_with(|| MethodSummary {
                cell: r.cell,
                n: r.n,
                p1: r.p1,
                p2: r.p2,
                q: r.q,
                t: r.t,
                t_over_tc: r.t_over_tc,
                method: o.method.clone(),
                trials: 0,
                failures: 0,
                exact_rate: 0.0,
                mean_mismatch_fraction: 0.0,
            });
            s.trials += 1;
            match (o.exact, o.mismatch_fraction) {
                (Some(exact), Some(frac)) => {
                    s.exact_rate += f64::from(u8::from(exact));
                    s.mean_mismatch_fraction += frac;
                }
                _ => s.failures += 1,
            }
        }
    }
    groups
        .into_values()
        .map(|mut s| {
            let ok = (s.trials - s.failures).max(1) as f64;
            s.exact_rate /= ok;
            s.mean_mismatch_fraction /= ok;
            s
        })
        .collect()
}
