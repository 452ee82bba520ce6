//! `prtail`: degree statistics, PageRank, tail fits and their theoretical
//! predictions for directed graphs, plus the Monte Carlo and graph generator
//! used to check them.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit status for bad flags, invalid specs and malformed JSON.
const EXIT_USAGE: u8 = 2;
/// Exit status for unreadable or unusable data.
const EXIT_DATA: u8 = 3;
/// Exit status when an iteration did not converge.
const EXIT_NONCONVERGENCE: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "prtail",
    version,
    about = "PageRank tail analysis for directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON file with default settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for output files.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GraphInput {
    /// Edge list: one `src dst` pair per line, `#` comments, optionally gzipped.
    graph: PathBuf,
    /// Discard edges from a node to itself.
    #[arg(long)]
    drop_self_loops: bool,
}

#[derive(Debug, Args)]
struct IterationFlags {
    /// Damping factor; repeat for several.
    #[arg(long = "damping", value_name = "C")]
    dampings: Vec<f64>,
    /// Stop when the mean absolute change per node falls to this value.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Iterations to keep, comma separated.
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Degree profile of a graph as JSON.
    Stats {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        common: Common,
    },
    /// PageRank scores as CSV.
    Pagerank {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        iteration: IterationFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Full comparison of in-degree and PageRank tails with theory.
    Analyze {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        iteration: IterationFlags,
        /// Fixed in-degree tail threshold.
        #[arg(long)]
        xmin: Option<f64>,
        /// In-degree tail index to use instead of the estimate.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Predicted PageRank lines from an in-degree line and degree statistics.
    Predict {
        /// In-degree tail index (CCDF slope magnitude).
        #[arg(long)]
        alpha: f64,
        /// log10 intercept of the in-degree CCDF line.
        #[arg(long)]
        intercept: f64,
        /// Damping factor; repeat for several.
        #[arg(long = "damping", value_name = "C")]
        dampings: Vec<f64>,
        /// Degree profile JSON as written by `stats`.
        #[arg(long, conflicts_with_all = ["d", "p0", "b"])]
        profile: Option<PathBuf>,
        /// Mean degree.
        #[arg(long, requires_all = ["p0", "b"])]
        d: Option<f64>,
        /// Dangling fraction.
        #[arg(long)]
        p0: Option<f64>,
        /// Out-degree coefficient sum_j p_j j^(1 - alpha).
        #[arg(long)]
        b: Option<f64>,
        /// Largest iteration count to predict.
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo of the PageRank recursion for a model spec JSON.
    Simulate {
        spec: PathBuf,
        /// Iteration counts to report, comma separated.
        #[arg(long, value_delimiter = ',')]
        generations: Vec<usize>,
        /// Skip the run to convergence.
        #[arg(long)]
        no_converged: bool,
        /// Convergence threshold on the CCDF change between generations.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        max_generations: Option<usize>,
        #[arg(long)]
        pool_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Tail-ratio probe points per stage.
        #[arg(long, default_value_t = 8)]
        probes: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Random graph from a generator spec JSON.
    Generate {
        spec: PathBuf,
        /// Edge list to write; defaults to graph.tsv in the output directory.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use prtail_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NonConvergence { .. } => EXIT_NONCONVERGENCE,
                E::InvalidParameter(_)
                | E::Validation(_)
                | E::SeriesDiverges { .. }
                | E::Json(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some()
            || cause.downcast_ref::<commands::UsageError>().is_some()
        {
            return EXIT_USAGE;
        }
        if cause.downcast_ref::<commands::NotConverged>().is_some() {
            return EXIT_NONCONVERGENCE;
        }
    }
    EXIT_DATA
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
