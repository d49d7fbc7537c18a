use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use csbm::estimators::{
    degree_estimate, estimate_parameters, genie_estimate, map_exhaustive, two_step_refine_iterated,
};
use csbm::harness::{emit_results, run_sweep, summarize, OutputFormat};
use csbm::model::{read_graph, read_labels, sample_graph, sample_labels, write_graph, write_labels};
use csbm::spectral::{spectral_estimate, spectral_general};
use csbm::thresholds::{ch_divergence, encoding_weight, threshold_general_with_argmin, DEFAULT_TOL};
use csbm::{ChannelPair, Error, Labeling, ModelParams, ObservedGraph, SolverOptions, SweepConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "csbm", version, about = "Community recovery in the censored block model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample labels and an observed graph.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        graph_out: PathBuf,
        #[arg(long)]
        labels_out: PathBuf,
    },
    /// Estimate labels from an observed graph.
    Recover(RecoverArgs),
    /// Print the exact-recovery threshold and related quantities.
    Threshold {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Estimate (p, q) of a symmetric model from edge and triangle counts.
    EstimateParams {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Run a Monte Carlo sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Spectral,
    Degree,
    Genie,
    TwoStepSpectral,
    TwoStepDegree,
    SpectralGeneral,
    Map,
}

#[derive(clap::Args)]
struct RecoverArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// True labels, required for `genie`.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    p1: Option<f64>,
    /// Defaults to `p1`.
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    g1: Option<f64>,
    #[arg(long)]
    g2: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Refinement rounds for the two-step methods.
    #[arg(long, default_value_t = 1)]
    iterate: usize,
    /// Seed for the eigensolver start vector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Error(Error),
    Partial(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidParameter(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn require(value: Option<f64>, flag: &str, method: &str) -> Result<f64, Error> {
    value.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for method {method}")))
}

fn cmd_sample(n: usize, p1: f64, p2: f64, q: f64, t: f64, seed: u64, graph_out: &Path, labels_out: &Path) -> CmdResult {
    let params = ModelParams::new(n, p1, p2, q, t)?;
    if params.alpha_clamped() {
        eprintln!("note: t ln(n)/n = {:.4} exceeds 1; every pair is revealed", params.raw_alpha());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = sample_labels(n, &mut rng)?;
    let graph = sample_graph(&params, &labels, &mut rng)?;
    write_graph(&graph, create(graph_out)?)?;
    write_labels(&labels, create(labels_out)?)?;
    println!("alpha = {}", params.alpha());
    println!("revealed = {}", graph.revealed_count());
    println!("present = {}", graph.present_count());
    Ok(())
}

fn model_params(args: &RecoverArgs, graph: &ObservedGraph, method: &str) -> Result<ModelParams, Error> {
    let p1 = require(args.p1, "p1", method)?;
    let q = require(args.q, "q", method)?;
    let t = require(args.t, "t", method)?;
    ModelParams::new(graph.n(), p1, args.p2.unwrap_or(p1), q, t)
}

fn recover(args: &RecoverArgs, graph: &ObservedGraph) -> Result<Labeling, Error> {
    let opts = SolverOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let spectral = |rng: &mut ChaCha8Rng| -> Result<Labeling, Error> {
        let p1 = require(args.p1, "p1", "spectral")?;
        let q = require(args.q, "q", "spectral")?;
        let p = 0.5 * (p1 + args.p2.unwrap_or(p1));
        Ok(spectral_estimate(graph, p, q, &opts, rng)?.labels)
    };
    match args.method {
        MethodArg::Spectral => spectral(&mut rng),
        MethodArg::Degree => degree_estimate(graph, &model_params(args, graph, "degree")?),
        MethodArg::Genie => {
            let path = args
                .labels
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("--labels is required for method genie".into()))?;
            let truth = read_labels(open(path)?)?;
            genie_estimate(graph, &truth, &model_params(args, graph, "genie")?)
        }
        MethodArg::TwoStepSpectral => {
            let params = model_params(args, graph, "two-step-spectral")?;
            two_step_refine_iterated(graph, &spectral(&mut rng)?, &params, args.iterate)
        }
        MethodArg::TwoStepDegree => {
            let params = model_params(args, graph, "two-step-degree")?;
            two_step_refine_iterated(graph, &degree_estimate(graph, &params)?, &params, args.iterate)
        }
        MethodArg::SpectralGeneral => {
            let m = "spectral-general";
            let y = require(args.y, "y", m)?;
            let r = require(args.r, "r", m)?;
            let g1 = require(args.g1, "g1", m)?;
            let g2 = require(args.g2, "g2", m)?;
            Ok(spectral_general(graph, y, r, g1, g2, &opts, &mut rng)?.labels)
        }
        MethodArg::Map => map_exhaustive(graph, &model_params(args, graph, "map")?),
    }
}

fn cmd_recover(args: &RecoverArgs) -> CmdResult {
    let graph = read_graph(open(&args.graph)?)?;
    let labels = recover(args, &graph)?;
    write_labels(&labels, create(&args.out)?)?;
    println!("n1 = {}", labels.n1());
    println!("n2 = {}", labels.n2());
    Ok(())
}

fn cmd_threshold(p1: f64, p2: f64, q: f64, t: Option<f64>) -> CmdResult {
    if p1 == p2 {
        println!("y = {}", encoding_weight(p1, q)?);
    }
    let (t_c, x_star) = threshold_general_with_argmin(p1, p2, q, DEFAULT_TOL)?;
    println!("t_c = {t_c}");
    println!("x_star = {x_star}");
    if let Some(t) = t {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {t}")).into());
        }
        let scaled = ChannelPair::from_model(p1, p2, q)?.scaled(t / 2.0);
        println!("delta_plus = {}", ch_divergence(&scaled.c1, &scaled.c2, DEFAULT_TOL)?);
    }
    Ok(())
}

fn cmd_estimate(graph: &Path, t: f64) -> CmdResult {
    let graph = read_graph(open(graph)?)?;
    let est = estimate_parameters(&graph, t)?;
    println!("p_hat = {}", est.p_hat);
    println!("q_hat = {}", est.q_hat);
    println!("edges = {}", est.edges);
    println!("triangles = {}", est.triangles);
    Ok(())
}

fn cmd_sweep(config: &Path, out: &Path, parallelism: usize, format: Format) -> CmdResult {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", config.display())))?;
    let config = SweepConfig::from_json(&text)?;
    let result = run_sweep(&config, parallelism)?;
    let format = match format {
        Format::Csv => OutputFormat::Csv,
        Format::Jsonl => OutputFormat::Jsonl,
    };
    emit_results(&result.records, create(out)?, format)?;

    println!("cell\tn\tp1\tp2\tq\tt\tt/t_c\tmethod\texact_rate\tmean_mismatch\tfailures");
    for s in summarize(&result.records) {
        let ratio = s.t_over_tc.map_or("-".to_string(), |r| format!("{r:.3}"));
        println!(
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{}\t{}\t{:.3}\t{:.3e}\t{}",
            s.cell, s.n, s.p1, s.p2, s.q, s.t, ratio, s.method, s.exact_rate, s.mean_mismatch_fraction, s.failures
        );
    }
    for skip in &result.skipped {
        eprintln!(
            "skipped cell {} (n={}, p1={}, p2={}, q={}): {}",
            skip.index, skip.n, skip.p1, skip.p2, skip.q, skip.reason
        );
    }
    if result.has_failures() {
        let failed = result.records.iter().filter(|r| r.has_failures()).count();
        return Err(Failure::Partial(format!(
            "{failed} trial(s) had method failures, {} cell(s) skipped",
            result.skipped.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample { n, p1, p2, q, t, seed, graph_out, labels_out } => {
            cmd_sample(*n, *p1, *p2, *q, *t, *seed, graph_out, labels_out)
        }
        Command::Recover(args) => cmd_recover(args),
        Command::Threshold { p1, p2, q, t } => cmd_threshold(*p1, *p2, *q, *t),
        Command::EstimateParams { graph, t } => cmd_estimate(graph, *t),
        Command::Sweep { config, out, parallelism, format } => cmd_sweep(config, out, *parallelism, *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_parameter_error() { 2 } else { 1 })
        }
    }
}
