use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use prtail_core::graph::write_edge_list;
use prtail_core::pagerank::write_scores_csv;
use prtail_core::report::{self, AnalyzeOptions, PredictedLine, SimulateOptions};
use prtail_core::sim::{ModelSpec, StopRule};
use prtail_core::synth::{generate_with_threads, SynthSpec};
use prtail_core::tail::TailFit;
use prtail_core::{
    degree_profile, load_edge_list_path, pagerank, DegreeProfile, EdgeListFormat, Graph,
    PageRankParams, TheoryParams,
};

use crate::config::{pick, pick_list, read_json, Config};
use crate::{Command, Common, GraphInput, IterationFlags};

/// Points in each simulated pool CCDF file.
const POOL_CCDF_POINTS: usize = 200;

/// Invalid flag values detected by the front end.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Outputs were written but an iteration stopped at its limit.
#[derive(Debug)]
pub struct NotConverged(pub String);

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NotConverged {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

struct Settings {
    config: Config,
    threads: usize,
    output_dir: Option<PathBuf>,
}

impl Settings {
    fn new(common: Common) -> Result<Self> {
        let config = Config::load(common.config.as_deref())?;
        let threads = pick(common.threads, config.threads, 1);
        if threads == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        let output_dir = common.output_dir.or_else(|| config.output_dir.clone());
        Ok(Self {
            config,
            threads,
            output_dir,
        })
    }

    /// Output directory, created on first use; `.` when none was given.
    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn load_graph(&self, input: &GraphInput) -> Result<Graph> {
        let fmt = EdgeListFormat {
            drop_self_loops: input.drop_self_loops || self.config.drop_self_loops.unwrap_or(false),
            ..Default::default()
        };
        let g = load_edge_list_path(&input.graph, fmt)?;
        log::info!(
            "loaded {}: {} nodes, {} edges",
            input.graph.display(),
            g.num_nodes(),
            g.num_edges()
        );
        Ok(g)
    }

    fn pagerank_params(&self, flags: &IterationFlags) -> Result<(Vec<f64>, PageRankParams)> {
        let defaults = PageRankParams::default();
        let dampings = pick_list(
            flags.dampings.clone(),
            self.config.dampings.clone(),
            vec![defaults.damping],
        );
        let snapshots = pick_list(
            flags.snapshots.clone(),
            self.config.snapshots.clone(),
            vec![],
        );
        let params = PageRankParams {
            damping: defaults.damping,
            tol: pick(flags.tol, self.config.tol, defaults.tol),
            max_iters: pick(flags.max_iters, self.config.max_iters, defaults.max_iters),
            snapshot_iters: snapshots.into_iter().collect(),
            threads: self.threads,
        };
        for &c in &dampings {
            PageRankParams {
                damping: c,
                ..params.clone()
            }
            .validate()?;
        }
        Ok((dampings, params))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

fn write_lines_csv(path: &Path, lines: &[PredictedLine]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "c,stage,log10_coefficient,slope,intercept")?;
    for l in lines {
        writeln!(
            w,
            "{},{},{},{},{}",
            l.c,
            l.stage.label(),
            l.log10_coefficient,
            l.slope,
            l.intercept
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Stats { input, common } => stats(input, common),
        Command::Pagerank {
            input,
            iteration,
            common,
        } => pagerank_cmd(input, iteration, common),
        Command::Analyze {
            input,
            iteration,
            xmin,
            alpha,
            common,
        } => analyze(input, iteration, xmin, alpha, common),
        Command::Predict {
            alpha,
            intercept,
            dampings,
            profile,
            d,
            p0,
            b,
            k_max,
            common,
        } => predict(PredictArgs {
            alpha,
            intercept,
            dampings,
            profile,
            d,
            p0,
            b,
            k_max,
            common,
        }),
        Command::Simulate {
            spec,
            generations,
            no_converged,
            tolerance,
            max_generations,
            pool_size,
            seed,
            probes,
            common,
        } => simulate(SimulateArgs {
            spec,
            generations,
            no_converged,
            tolerance,
            max_generations,
            pool_size,
            seed,
            probes,
            common,
        }),
        Command::Generate {
            spec,
            output,
            n,
            seed,
            common,
        } => generate(spec, output, n, seed, common),
    }
}

fn stats(input: GraphInput, common: Common) -> Result<()> {
    let settings = Settings::new(common)?;
    let g = settings.load_graph(&input)?;
    let profile = degree_profile(&g);
    if settings.output_dir.is_some() {
        write_json(&settings.out_dir()?.join("stats.json"), &profile)?;
    }
    print_json(&profile)
}

#[derive(Serialize)]
struct PageRankRun {
    c: f64,
    iters_run: usize,
    converged: bool,
    final_residual: Option<f64>,
    mean_score: f64,
    scores_csv: PathBuf,
}

fn pagerank_cmd(input: GraphInput, flags: IterationFlags, common: Common) -> Result<()> {
    let settings = Settings::new(common)?;
    let (dampings, base) = settings.pagerank_params(&flags)?;
    let g = settings.load_graph(&input)?;
    let dir = settings.out_dir()?;
    let mut runs = Vec::new();
    for c in dampings {
        let params = PageRankParams {
            damping: c,
            ..base.clone()
        };
        let result = pagerank(&g, &params)?;
        let path = dir.join(format!("pagerank_c{c}.csv"));
        write_scores_csv(&g, &result.scores, create(&path)?)?;
        for (k, scores) in &result.snapshots {
            write_scores_csv(
                &g,
                scores,
                create(&dir.join(format!("pagerank_c{c}_k{k}.csv")))?,
            )?;
        }
        for &k in &params.snapshot_iters {
            if !result.snapshots.contains_key(&k) {
                log::warn!(
                    "c = {c}: iteration {k} not reached (stopped after {})",
                    result.iters_run
                );
            }
        }
        runs.push(PageRankRun {
            c,
            iters_run: result.iters_run,
            converged: result.converged,
            final_residual: result.residuals.last().copied(),
            mean_score: result.mean_score(),
            scores_csv: path,
        });
    }
    print_json(&runs)?;
    let stuck: Vec<String> = runs
        .iter()
        .filter(|r| !r.converged)
        .map(|r| format!("c = {}", r.c))
        .collect();
    if !stuck.is_empty() {
        return Err(NotConverged(format!(
            "PageRank did not reach the tolerance for {}",
            stuck.join(", ")
        ))
        .into());
    }
    Ok(())
}

fn analyze(
    input: GraphInput,
    flags: IterationFlags,
    xmin: Option<f64>,
    alpha: Option<f64>,
    common: Common,
) -> Result<()> {
    let settings = Settings::new(common)?;
    let (dampings, base) = settings.pagerank_params(&flags)?;
    let xmin = xmin.or(settings.config.xmin);
    let alpha = alpha.or(settings.config.alpha);
    if let Some(x) = xmin {
        if !(x > 0.0 && x.is_finite()) {
            return Err(usage(format!("--xmin must be positive, got {x}")));
        }
    }
    if let Some(a) = alpha {
        if !(a >= 1.0 && a.is_finite()) {
            return Err(usage(format!("--alpha must be at least 1, got {a}")));
        }
    }
    let g = settings.load_graph(&input)?;
    let opts = AnalyzeOptions {
        dampings,
        snapshot_iters: base.snapshot_iters.clone(),
        tol: base.tol,
        max_iters: base.max_iters,
        xmin,
        alpha,
        threads: settings.threads,
    };
    let analysis = report::analyze(&g, &opts)?;
    let dir = settings.out_dir()?;
    write_json(&dir.join("report.json"), &analysis.report)?;
    for s in &analysis.series {
        s.series
            .write_csv(create(&dir.join(format!("ccdf_{}.csv", s.name)))?)?;
    }
    write_lines_csv(&dir.join("lines.csv"), &analysis.report.predicted_lines)?;
    let mut w = create(&dir.join("residuals.csv"))?;
    writeln!(w, "c,stage,observed_intercept,predicted_intercept,residual")?;
    for r in &analysis.report.residuals {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.c,
            r.stage.label(),
            r.observed_intercept,
            r.predicted_intercept,
            r.residual
        )?;
    }
    w.flush()?;
    print_json(&analysis.report)?;
    if !analysis.report.all_converged() {
        return Err(NotConverged(
            "PageRank did not reach the tolerance for every damping factor".into(),
        )
        .into());
    }
    Ok(())
}

struct PredictArgs {
    alpha: f64,
    intercept: f64,
    dampings: Vec<f64>,
    profile: Option<PathBuf>,
    d: Option<f64>,
    p0: Option<f64>,
    b: Option<f64>,
    k_max: usize,
    common: Common,
}

fn predict(args: PredictArgs) -> Result<()> {
    let settings = Settings::new(args.common)?;
    let dampings = pick_list(args.dampings, settings.config.dampings.clone(), vec![0.85]);
    let profile: Option<DegreeProfile> = match &args.profile {
        Some(p) => Some(read_json(p)?),
        None => None,
    };
    let fit = TailFit {
        alpha_hat: args.alpha,
        x_min: f64::NAN,
        intercept: args.intercept,
        tail_count: 0,
    };
    let mut reports = Vec::new();
    for c in dampings {
        let params = match (&profile, args.d, args.p0, args.b) {
            (Some(p), ..) => TheoryParams::from_profile(c, args.alpha, p)?,
            (None, Some(d), Some(p0), Some(b)) => TheoryParams::new(c, args.alpha, d, p0, b)?,
            _ => return Err(usage("give either --profile or all of --d, --p0 and --b")),
        };
        reports.push(report::predict(&fit, &params, args.k_max)?);
    }
    if settings.output_dir.is_some() {
        let lines: Vec<PredictedLine> = reports
            .iter()
            .flat_map(|r| r.predicted_lines.iter().copied())
            .collect();
        let dir = settings.out_dir()?;
        write_lines_csv(&dir.join("lines.csv"), &lines)?;
        write_json(&dir.join("prediction.json"), &reports)?;
    }
    print_json(&reports)
}

struct SimulateArgs {
    spec: PathBuf,
    generations: Vec<usize>,
    no_converged: bool,
    tolerance: Option<f64>,
    max_generations: Option<usize>,
    pool_size: Option<usize>,
    seed: Option<u64>,
    probes: usize,
    common: Common,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let settings = Settings::new(args.common)?;
    let mut spec: ModelSpec = read_json(&args.spec)?;
    if let Some(m) = args.pool_size {
        spec.pool_size = m;
    }
    if let Some(seed) = args.seed.or(settings.config.seed) {
        spec.seed = seed;
    }
    let StopRule::Converged {
        tolerance,
        max_generations,
    } = StopRule::CONVERGED
    else {
        unreachable!()
    };
    let generations: BTreeSet<usize> = if args.generations.is_empty() {
        SimulateOptions::default().generations
    } else {
        args.generations.into_iter().collect()
    };
    let opts = SimulateOptions {
        generations,
        converged: !args.no_converged,
        tolerance: args.tolerance.unwrap_or(tolerance),
        max_generations: args.max_generations.unwrap_or(max_generations),
        probes: args.probes,
        threads: settings.threads,
    };
    let out = report::simulate(&spec, &opts)?;
    let dir = settings.out_dir()?;
    write_json(&dir.join("simulation.json"), &out.summary)?;
    for (stage, pool) in &out.pools {
        report::pool_ccdf(pool, POOL_CCDF_POINTS)
            .write_csv(create(&dir.join(format!("ccdf_{}.csv", stage.label())))?)?;
    }
    let mut w = create(&dir.join("tail_ratios.csv"))?;
    writeln!(w, "stage,x,empirical,predicted,ratio")?;
    for s in &out.summary.stages {
        for r in &s.tail_ratios {
            writeln!(
                w,
                "{},{},{},{},{}",
                s.stage.label(),
                r.x,
                r.empirical,
                r.predicted,
                r.ratio
            )?;
        }
    }
    w.flush()?;
    for check in &out.summary.invariants {
        let status = match check.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        eprintln!("[{status}] {}: {}", check.name, check.detail);
    }
    if out.summary.degenerate {
        eprintln!("degenerate pool: every sample equals 1");
    }
    print_json(&out.summary)
}

fn generate(
    spec_path: PathBuf,
    output: Option<PathBuf>,
    n: Option<usize>,
    seed: Option<u64>,
    common: Common,
) -> Result<()> {
    let settings = Settings::new(common)?;
    let mut spec: SynthSpec = read_json(&spec_path)?;
    if let Some(n) = n {
        spec.n = n;
    }
    if let Some(seed) = seed.or(settings.config.seed) {
        spec.seed = seed;
    }
    let out = generate_with_threads(&spec, settings.threads)?;
    let path = match output {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            p
        }
        None => settings.out_dir()?.join("graph.tsv"),
    };
    write_edge_list(&out.graph, create(&path)?)?;
    out.write_sidecar(&spec, &path.with_extension("json"))?;
    print_json(&out.sidecar(&spec))
}
