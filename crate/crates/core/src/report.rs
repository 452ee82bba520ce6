//! Analysis pipeline and serializable reports.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{degree_profile, DegreeProfile, Graph};
use crate::pagerank::{pagerank, PageRankParams};
use crate::sim::{
    log_spaced, tail_ratios, ModelSpec, SamplePool, SimulationOptions, Simulator, StopRule,
    TailRatio, TAIL_PROBE_BAND,
};
use crate::tail::{ccdf, choose_xmin, fit_with_series, CcdfSeries, TailFit};
use crate::theory::{predict_line, CoefficientTable, TheoryParams};
use crate::{Error, Result};

/// Bumped whenever a report field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// Accepted band for simulated tail ratios.
pub const TAIL_RATIO_BAND: (f64, f64) = (0.8, 1.25);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub dampings: Vec<f64>,
    /// Power iterations whose scores are fitted against `C_k`.
    pub snapshot_iters: BTreeSet<usize>,
    pub tol: f64,
    pub max_iters: usize,
    /// Fixed in-degree tail threshold; chosen by heuristic when absent.
    pub xmin: Option<f64>,
    /// Tail index used in place of the in-degree estimate.
    pub alpha: Option<f64>,
    pub threads: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        let pr = PageRankParams::default();
        Self {
            dampings: vec![0.85],
            snapshot_iters: BTreeSet::new(),
            tol: pr.tol,
            max_iters: pr.max_iters,
            xmin: None,
            alpha: None,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    Mle,
    Override,
}

/// Where a line or residual belongs: iteration `k`, or the fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Iteration(usize),
    Limit,
}

impl Stage {
    pub fn label(&self) -> String {
        match self {
            Stage::Iteration(k) => format!("k{k}"),
            Stage::Limit => "limit".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankFit {
    pub c: f64,
    pub iters_run: usize,
    pub converged: bool,
    /// Fit of the final scores with their own exponent.
    pub fit: Option<TailFit>,
    /// x_min used for the PageRank tails.
    pub x_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedLine {
    pub c: f64,
    pub stage: Stage,
    pub log10_coefficient: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub c: f64,
    pub stage: Stage,
    /// Intercept of the PageRank CCDF with the slope held at the predicted one.
    pub observed_intercept: f64,
    pub predicted_intercept: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub degree_profile: DegreeProfile,
    pub indegree_fit: Option<TailFit>,
    pub alpha_source: AlphaSource,
    pub xmin_degenerate: bool,
    pub pagerank_fits: Vec<PageRankFit>,
    pub coefficient_tables: Vec<CoefficientTable>,
    pub predicted_lines: Vec<PredictedLine>,
    pub residuals: Vec<Residual>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn all_converged(&self) -> bool {
        self.pagerank_fits.iter().all(|f| f.converged)
    }
}

/// A CCDF with the file stem it is written under.
#[derive(Debug, Clone)]
pub struct NamedSeries {
    pub name: String,
    pub series: CcdfSeries,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub series: Vec<NamedSeries>,
}

fn fmt_c(c: f64) -> String {
    format!("c{c}")
}

/// In-degree fit honoring the x_min and alpha overrides. `None` when the
/// tail is too small, with the reason pushed to `warnings`.
fn fit_indegree(
    values: &[f64],
    series: &CcdfSeries,
    opts: &AnalyzeOptions,
    warnings: &mut Vec<String>,
) -> (Option<TailFit>, bool) {
    let (x_min, degenerate) = match opts.xmin {
        Some(x) => (x, false),
        None => {
            let choice = choose_xmin(values);
            if choice.degenerate {
                warnings.push(format!(
                    "in-degree x_min heuristic fell back to the median ({})",
                    choice.x_min
                ));
            }
            (choice.x_min, choice.degenerate)
        }
    };
    let fit = match fit_with_series(values, series, x_min) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("in-degree tail not fitted: {e}"));
            None
        }
    };
    let fit = match (fit, opts.alpha) {
        (Some(f), Some(alpha)) => {
            series
                .pinned_intercept(f.x_min, alpha)
                .map(|intercept| TailFit {
                    alpha_hat: alpha,
                    intercept,
                    ..f
                })
        }
        (f, _) => f,
    };
    (fit, degenerate)
}

/// Runs stats, the in-degree fit, PageRank per damping factor, the
/// coefficient tables, predicted lines and residuals.
pub fn analyze(g: &Graph, opts: &AnalyzeOptions) -> Result<Analysis> {
    if let Some(alpha) = opts.alpha {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
    }
    let profile = degree_profile(g);
    let mut warnings = Vec::new();
    let mut named = Vec::new();

    let in_values: Vec<f64> = g.in_degrees().iter().map(|&k| k as f64).collect();
    let (indegree_fit, xmin_degenerate) = match ccdf(&in_values) {
        Ok(series) => {
            let fit = fit_indegree(&in_values, &series, opts, &mut warnings);
            named.push(NamedSeries {
                name: "indegree".into(),
                series,
            });
            fit
        }
        Err(e) => {
            warnings.push(format!("in-degree CCDF unavailable: {e}"));
            (None, true)
        }
    };

    let mut report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        degree_profile: profile,
        indegree_fit,
        alpha_source: if opts.alpha.is_some() {
            AlphaSource::Override
        } else {
            AlphaSource::Mle
        },
        xmin_degenerate,
        pagerank_fits: Vec::new(),
        coefficient_tables: Vec::new(),
        predicted_lines: Vec::new(),
        residuals: Vec::new(),
        warnings,
    };

    let snapshots: BTreeSet<usize> = opts
        .snapshot_iters
        .iter()
        .copied()
        .filter(|&k| k > 0)
        .collect();
    for &c in &opts.dampings {
        let params = PageRankParams {
            damping: c,
            tol: opts.tol,
            max_iters: opts.max_iters,
            snapshot_iters: snapshots.clone(),
            threads: opts.threads,
        };
        let pr = pagerank(g, &params)?;
        if !pr.converged {
            report.warnings.push(format!(
                "PageRank at c = {c} stopped after {} iterations without reaching tol {}",
                pr.iters_run, opts.tol
            ));
        }
        let final_series = ccdf(&pr.scores)?;
        let choice = choose_xmin(&pr.scores);
        let own_fit = fit_with_series(&pr.scores, &final_series, choice.x_min).ok();

        let mut observed: Vec<(Stage, CcdfSeries)> = Vec::new();
        for &k in &snapshots {
            match pr.snapshot(k) {
                Ok(scores) => {
                    let series = ccdf(scores)?;
                    named.push(NamedSeries {
                        name: format!("pagerank_{}_k{k}", fmt_c(c)),
                        series: series.clone(),
                    });
                    observed.push((Stage::Iteration(k), series));
                }
                Err(_) => report.warnings.push(format!(
                    "c = {c}: iteration {k} not reached (converged after {})",
                    pr.iters_run
                )),
            }
        }
        named.push(NamedSeries {
            name: format!("pagerank_{}", fmt_c(c)),
            series: final_series.clone(),
        });
        observed.push((Stage::Limit, final_series));

        report.pagerank_fits.push(PageRankFit {
            c,
            iters_run: pr.iters_run,
            converged: pr.converged,
            fit: own_fit,
            x_min: choice.x_min,
        });

        let Some(in_fit) = report.indegree_fit else {
            continue;
        };
        let theory = match TheoryParams::from_profile(c, in_fit.alpha_hat, &report.degree_profile) {
            Ok(t) => t,
            Err(e) => {
                report
                    .warnings
                    .push(format!("c = {c}: no coefficients: {e}"));
                continue;
            }
        };
        let k_max = snapshots.iter().copied().max().unwrap_or(1);
        let table = match CoefficientTable::new(&theory, k_max) {
            Ok(t) => t,
            Err(e) => {
                report
                    .warnings
                    .push(format!("c = {c}: no coefficients: {e}"));
                continue;
            }
        };
        for (stage, series) in &observed {
            let coefficient = match stage {
                Stage::Iteration(k) => table.get(*k).expect("k within table"),
                Stage::Limit => table.c_limit,
            };
            let line = predict_line(&in_fit, coefficient)?;
            report.predicted_lines.push(PredictedLine {
                c,
                stage: *stage,
                log10_coefficient: coefficient.log10(),
                slope: line.slope,
                intercept: line.intercept,
            });
            match series.pinned_intercept(choice.x_min, in_fit.alpha_hat) {
                Some(obs) => report.residuals.push(Residual {
                    c,
                    stage: *stage,
                    observed_intercept: obs,
                    predicted_intercept: line.intercept,
                    residual: obs - line.intercept,
                }),
                None => report.warnings.push(format!(
                    "c = {c}, {}: no PageRank CCDF points above x_min",
                    stage.label()
                )),
            }
        }
        report.coefficient_tables.push(table);
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(Analysis {
        report,
        series: named,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub schema_version: u32,
    pub indegree_fit: TailFit,
    pub coefficient_table: CoefficientTable,
    pub predicted_lines: Vec<PredictedLine>,
}

/// Predicted PageRank lines for `k = 1..=k_max` and the limit.
pub fn predict(
    indegree_fit: &TailFit,
    params: &TheoryParams,
    k_max: usize,
) -> Result<PredictionReport> {
    let table = CoefficientTable::new(params, k_max.max(1))?;
    let mut lines = Vec::new();
    let stages = (1..=k_max)
        .map(|k| (Stage::Iteration(k), table.c_k[k - 1]))
        .chain(std::iter::once((Stage::Limit, table.c_limit)));
    for (stage, coefficient) in stages {
        let line = predict_line(indegree_fit, coefficient)?;
        lines.push(PredictedLine {
            c: params.c,
            stage,
            log10_coefficient: coefficient.log10(),
            slope: line.slope,
            intercept: line.intercept,
        });
    }
    Ok(PredictionReport {
        schema_version: SCHEMA_VERSION,
        indegree_fit: *indegree_fit,
        coefficient_table: table,
        predicted_lines: lines,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOptions {
    /// Fixed iteration counts to report.
    pub generations: BTreeSet<usize>,
    /// Also run to the converged pool.
    pub converged: bool,
    pub tolerance: f64,
    pub max_generations: usize,
    /// Number of tail-ratio probe points per stage.
    pub probes: usize,
    pub threads: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        let StopRule::Converged {
            tolerance,
            max_generations,
        } = StopRule::CONVERGED
        else {
            unreachable!()
        };
        Self {
            generations: BTreeSet::from([1, 2]),
            converged: true,
            tolerance,
            max_generations,
            probes: 8,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    /// `None` when the check does not apply to this spec.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub generation: usize,
    pub mean: f64,
    pub min: f64,
    /// `C_k` or `C`; absent when `c = 0`.
    pub coefficient: Option<f64>,
    pub tail_ratios: Vec<TailRatio>,
}

impl StageSummary {
    pub fn ratios_in_band(&self) -> Option<bool> {
        let (lo, hi) = TAIL_RATIO_BAND;
        (!self.tail_ratios.is_empty()).then(|| {
            self.tail_ratios
                .iter()
                .all(|r| (lo..=hi).contains(&r.ratio))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub schema_version: u32,
    pub spec: ModelSpec,
    /// Set when `c = 0`: every sample equals 1.
    pub degenerate: bool,
    pub stages: Vec<StageSummary>,
    pub invariants: Vec<InvariantCheck>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub summary: SimulationSummary,
    pub pools: Vec<(Stage, SamplePool)>,
}

/// Runs the requested stages and compares each pool's tail with theory.
pub fn simulate(spec: &ModelSpec, opts: &SimulateOptions) -> Result<SimulationOutput> {
    let sim = Simulator::new(spec)?;
    let theory = spec.theory();
    let table = match theory {
        Some(t) => Some(CoefficientTable::new(
            &t,
            opts.generations.iter().copied().max().unwrap_or(1).max(1),
        )?),
        None => None,
    };
    let mut pools = Vec::new();
    let last = opts.generations.iter().copied().max().unwrap_or(0);
    if last > 0 {
        let run = sim.run(&SimulationOptions {
            stop: StopRule::Generations(last),
            keep: opts.generations.clone(),
            threads: opts.threads,
        })?;
        for (k, pool) in run.kept {
            if k > 0 {
                pools.push((Stage::Iteration(k), pool));
            }
        }
    }
    if opts.converged {
        let run = sim.run(&SimulationOptions {
            stop: StopRule::Converged {
                tolerance: opts.tolerance,
                max_generations: opts.max_generations,
            },
            keep: BTreeSet::new(),
            threads: opts.threads,
        })?;
        pools.push((Stage::Limit, run.pool));
    }

    let degenerate = spec.c == 0.0;
    let mut warnings = Vec::new();
    if degenerate {
        warnings.push("c = 0: every sample equals 1, no tail to compare".to_string());
    }
    let mut stages = Vec::new();
    for (stage, pool) in &pools {
        let coefficient = table.as_ref().map(|t| match stage {
            Stage::Iteration(k) => t.get(*k).expect("k within table"),
            Stage::Limit => t.c_limit,
        });
        let sorted = pool.sorted();
        let tail = match coefficient {
            Some(coef) => tail_ratios(
                &sorted,
                sim.indegree_law(),
                coef,
                TAIL_PROBE_BAND,
                opts.probes,
            ),
            None => Vec::new(),
        };
        stages.push(StageSummary {
            stage: *stage,
            generation: pool.generation,
            mean: pool.mean(),
            min: pool.min(),
            coefficient,
            tail_ratios: tail,
        });
    }

    let mut invariants = Vec::new();
    let floor = spec.floor();
    let lowest = stages.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    invariants.push(InvariantCheck {
        name: "samples_at_least_floor".into(),
        passed: (!stages.is_empty()).then_some(lowest >= floor - 1e-12),
        detail: format!("floor {floor}, smallest sample {lowest}"),
    });
    for (s, (_, pool)) in stages.iter().zip(&pools) {
        let m = pool.len() as f64;
        let var = pool
            .values
            .iter()
            .map(|v| (v - s.mean).powi(2))
            .sum::<f64>()
            / m;
        let bound = 5.0 * var.sqrt() / m.sqrt();
        let applies = spec.alpha > 2.0 || degenerate;
        invariants.push(InvariantCheck {
            name: format!("mean_is_one_{}", s.stage.label()),
            passed: applies.then_some((s.mean - 1.0).abs() <= bound.max(1e-12)),
            detail: if applies {
                format!("mean {} (bound ±{bound:.3e})", s.mean)
            } else {
                format!(
                    "mean {}; not checked for alpha <= 2 (infinite variance)",
                    s.mean
                )
            },
        });
        if !degenerate {
            invariants.push(InvariantCheck {
                name: format!("tail_ratio_{}", s.stage.label()),
                passed: s.ratios_in_band(),
                detail: format!(
                    "{} probes, ratios {:?}",
                    s.tail_ratios.len(),
                    s.tail_ratios
                        .iter()
                        .map(|r| (r.ratio * 1000.0).round() / 1000.0)
                        .collect::<Vec<_>>()
                ),
            });
        }
    }
    Ok(SimulationOutput {
        summary: SimulationSummary {
            schema_version: SCHEMA_VERSION,
            spec: spec.clone(),
            degenerate,
            stages,
            invariants,
            warnings,
        },
        pools,
    })
}

/// CCDF of a pool on `count` log-spaced points, for compact CSV output.
pub fn pool_ccdf(pool: &SamplePool, count: usize) -> CcdfSeries {
    let sorted = pool.sorted();
    let values = sorted.values();
    let (lo, hi) = (values[0], values[values.len() - 1]);
    let points = if lo > 0.0 && hi > lo {
        log_spaced(lo, hi, count)
            .into_iter()
            .map(|x| crate::tail::CcdfPoint {
                x,
                fraction: sorted.ccdf(x),
            })
            .filter(|p| p.fraction > 0.0)
            .collect()
    } else {
        Vec::new()
    };
    CcdfSeries {
        points,
        source_count: values.len(),
    }
}
