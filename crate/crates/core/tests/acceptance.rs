//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p prtail-core --test acceptance`.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prtail_core::graph::{histogram_mean, Graph, NodeId};
use prtail_core::report::{analyze, AnalyzeOptions, Stage};
use prtail_core::sim::{
    binned_conditional_means, fit_affine, simulate_r, simulate_y_level, tail_ratios, ModelSpec,
    SamplePool, SimulationOptions, Simulator, StopRule, TAIL_PROBE_BAND,
};
use prtail_core::synth::{generate, SynthSpec};
use prtail_core::tail::fit_exponent_mle;
use prtail_core::theory::{coefficient_c, coefficient_ck, TheoryParams};
use prtail_core::{pagerank, PageRankParams};

use common::web_like_hist;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn model(c: f64, alpha: f64, pool_size: usize, seed: u64) -> ModelSpec {
    let outdeg_hist = web_like_hist();
    ModelSpec {
        c,
        alpha,
        d: histogram_mean(&outdeg_hist),
        outdeg_hist,
        pool_size,
        seed,
    }
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut check = |label: &str, value: f64, expected: f64| {
        let err = (value.log10() - expected).abs();
        worst = worst.max(err);
        if err > 0.01 {
            notes.push(format!("{label}: {:.4} vs {expected}", value.log10()));
        }
    };
    for (c, expected) in [(0.2, -2.53), (0.5, -1.96), (0.85, -1.50)] {
        let p = TheoryParams::new(c, 1.17, 26.17, 0.18, 0.65).unwrap();
        check(
            &format!("indochina c={c}"),
            coefficient_c(&p).unwrap(),
            expected,
        );
    }
    for (c, expected) in [(0.2, -2.24), (0.5, -1.68), (0.85, -1.21)] {
        let p = TheoryParams::new(c, 1.1, 22.3, 0.08, 0.70).unwrap();
        check(
            &format!("eu-2005 c={c}"),
            coefficient_c(&p).unwrap(),
            expected,
        );
    }
    let p = TheoryParams::new(0.85, 1.1, 8.2032, 0.006, 0.8558).unwrap();
    check("stanford C_1", coefficient_ck(&p, 1), -1.08);
    check("stanford C_2", coefficient_ck(&p, 2), -0.85);
    check("stanford C", coefficient_c(&p).unwrap(), -0.54);
    Outcome::new(
        notes.is_empty(),
        format!(
            "9 golden log10 coefficients, worst deviation {worst:.4}{}",
            notes.iter().map(|n| format!("; {n}")).collect::<String>()
        ),
    )
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (dst, src) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Linear system of the scale-free PageRank: `(I - c M) R = (1 - c) 1`,
/// where `M[i][j]` is the multiplicity of `j -> i` over `d_j`, or `1/n` for
/// dangling `j`.
fn pagerank_oracle(g: &Graph, c: f64) -> Vec<f64> {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
        for &j in g.in_neighbors(i as NodeId) {
            row[j as usize] -= c / g.out_degree(j) as f64;
        }
        for j in g.dangling_nodes() {
            row[j as usize] -= c / n as f64;
        }
    }
    solve_dense(a, vec![1.0 - c; n])
}

fn criterion_2() -> Outcome {
    let mut worst_component: f64 = 0.0;
    let mut worst_mean: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6usize);
        let density = rng.random_range(0.0..1.0);
        let mut edges = Vec::new();
        for s in 0..n as NodeId {
            for t in 0..n as NodeId {
                // Self-loops and double edges included.
                for _ in 0..2 {
                    if rng.random_bool(density * 0.6) {
                        edges.push((s, t));
                    }
                }
            }
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        let c = [0.2, 0.5, 0.85][seed as usize % 3];
        let r = pagerank(&g, &PageRankParams::with_damping(c)).unwrap();
        let exact = pagerank_oracle(&g, c);
        for (a, b) in r.scores.iter().zip(&exact) {
            worst_component = worst_component.max((a - b).abs());
        }
        worst_mean = worst_mean.max((r.mean_score() - 1.0).abs());
    }
    Outcome::new(
        worst_component <= 1e-8 && worst_mean <= 1e-9,
        format!(
            "100 random graphs (n <= 6): max |power - dense| = {worst_component:.2e}, max |mean - 1| = {worst_mean:.2e}"
        ),
    )
}

fn summarize_ratios(ratios: &[f64]) -> String {
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("[{lo:.3}, {hi:.3}]")
}

fn criterion_3() -> Outcome {
    let spec = model(0.85, 1.1, 1_000_000, 2024);
    let sim = Simulator::new(&spec).unwrap();
    let theory = spec.theory().unwrap();
    let law = sim.indegree_law();
    let run = sim
        .run(&SimulationOptions {
            stop: StopRule::Generations(2),
            keep: BTreeSet::from([1, 2]),
            threads: 1,
        })
        .unwrap();
    let converged = sim.run(&SimulationOptions::default());
    let mut stages: Vec<(String, SamplePool, f64)> = vec![
        (
            "k=1".into(),
            run.kept[&1].clone(),
            coefficient_ck(&theory, 1),
        ),
        (
            "k=2".into(),
            run.kept[&2].clone(),
            coefficient_ck(&theory, 2),
        ),
    ];
    let mut notes = Vec::new();
    match converged {
        Ok(r) => {
            let g = r.pool.generation;
            stages.push((
                format!("converged (gen {g})"),
                r.pool,
                coefficient_c(&theory).unwrap(),
            ));
        }
        Err(e) => notes.push(format!("converged run failed: {e}")),
    }
    let mut passed = notes.is_empty();
    for (label, pool, coef) in &stages {
        let ratios: Vec<f64> = tail_ratios(&pool.sorted(), law, *coef, TAIL_PROBE_BAND, 8)
            .iter()
            .map(|r| r.ratio)
            .collect();
        let ok = !ratios.is_empty() && ratios.iter().all(|r| (0.8..=1.25).contains(r));
        passed &= ok;
        notes.push(format!("{label} {}", summarize_ratios(&ratios)));
    }
    Outcome::new(
        passed,
        format!(
            "alpha=1.1, M=1e6, tail ratios vs C_k P(N>x): {}",
            notes.join(", ")
        ),
    )
}

fn mean_field_fit(alpha: f64, pool_size: usize) -> (f64, f64, f64, usize) {
    let spec = model(0.85, alpha, pool_size, 77);
    let sim = Simulator::new(&spec).unwrap();
    let run = sim.run(&SimulationOptions::default()).unwrap();
    let (pool, ns) = sim.iterate_paired(&run.pool);
    let bins = binned_conditional_means(&ns, &pool.values, 1000);
    let pts: Vec<(f64, f64)> = bins.iter().map(|b| (b.n as f64, b.mean)).collect();
    let fit = fit_affine(&pts).expect("at least two bins");
    let theory = spec.theory().unwrap();
    let slope = theory.c * (1.0 - theory.p0) / theory.d;
    (fit.slope, slope, fit.r2, bins.len())
}

fn criterion_4() -> Outcome {
    let (fitted, expected, r2, bins) = mean_field_fit(2.5, 1_000_000);
    let rel = (fitted / expected - 1.0).abs();
    let (f11, e11, r11, _) = mean_field_fit(1.1, 1_000_000);
    Outcome::new(
        rel <= 0.10 && r2 >= 0.98,
        format!(
            "alpha=2.5: slope {fitted:.5} vs c(1-p0)/d {expected:.5} ({:.1}% off), R^2 {r2:.4} over {bins} bins; \
             info alpha=1.1: slope {f11:.5} vs {e11:.5}, R^2 {r11:.4}",
            100.0 * rel
        ),
    )
}

fn criterion_5() -> Outcome {
    let spec = model(0.85, 2.5, 10_000, 5);
    let y = simulate_y_level(&spec, 4, 20_000, None).unwrap();
    let p0 = spec.p0();
    let mut passed = y.aborted == 0;
    let mut notes = Vec::new();
    for n in 0..=4 {
        let target = (1.0 - p0).powi(n as i32);
        let se = y.level_std_error(n);
        let z = if se > 0.0 {
            (y.level_mean(n) - target) / se
        } else if y.level_mean(n) == target {
            0.0
        } else {
            f64::INFINITY
        };
        passed &= z.abs() <= 4.0;
        notes.push(format!("n={n}: {:.4} (z={z:+.2})", y.level_mean(n)));
    }
    Outcome::new(
        passed,
        format!(
            "alpha=2.5, 20000 trees, E Y^(n) vs (1-p0)^n: {}; aborted {}",
            notes.join(", "),
            y.aborted
        ),
    )
}

fn criterion_6() -> Outcome {
    let outdeg_hist = web_like_hist();
    let spec = SynthSpec {
        n: 1_000_000,
        alpha: 1.1,
        d: histogram_mean(&outdeg_hist),
        outdeg_hist,
        seed: 606,
        indegree: Default::default(),
    };
    let out = generate(&spec).unwrap();
    let analysis = analyze(
        &out.graph,
        &AnalyzeOptions {
            dampings: vec![0.85],
            ..Default::default()
        },
    )
    .unwrap();
    let report = &analysis.report;
    let Some(in_fit) = report.indegree_fit else {
        return Outcome::new(false, "in-degree tail could not be fitted");
    };
    let Some(pr_fit) = report.pagerank_fits[0].fit else {
        return Outcome::new(false, "PageRank tail could not be fitted");
    };
    let Some(res) = report.residuals.iter().find(|r| r.stage == Stage::Limit) else {
        return Outcome::new(
            false,
            format!("no residual; warnings {:?}", report.warnings),
        );
    };
    let slope_gap = (pr_fit.alpha_hat - in_fit.alpha_hat).abs();
    let log10_c = report.coefficient_tables[0].log10_c_limit;
    Outcome::new(
        slope_gap < 0.1 && res.residual.abs() <= 0.15,
        format!(
            "n=1e6, alpha=1.1, c=0.85 (realized d={:.3}, p0={:.4}): in-degree alpha {:.3}, PageRank alpha {:.3} (gap {slope_gap:.3}); \
             observed offset {:.3} vs log10 C {log10_c:.3} (residual {:+.3})",
            report.degree_profile.d,
            report.degree_profile.p0,
            in_fit.alpha_hat,
            pr_fit.alpha_hat,
            res.observed_intercept - in_fit.intercept,
            res.residual
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1_500);
    let x: Vec<f64> = (0..1_000_000)
        .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 1.5))
        .collect();
    let fit = fit_exponent_mle(&x, 1.0).unwrap();
    let scale = 37.5;
    let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
    let fit_scaled = fit_exponent_mle(&scaled, scale).unwrap();
    let drift = (fit_scaled.alpha_hat / fit.alpha_hat - 1.0).abs();
    Outcome::new(
        (fit.alpha_hat - 1.5).abs() <= 0.01 && drift <= 1e-12,
        format!(
            "1e6 Pareto(1.5): alpha_hat {:.5}; relative change under x{scale} scaling {drift:.1e}",
            fit.alpha_hat
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = model(0.85, 1.1, 100_000, 8);
    let a = simulate_r(&spec, Some(3)).unwrap();
    let b = simulate_r(&spec, Some(3)).unwrap();
    let pools_equal = a.to_bytes() == b.to_bytes();

    let outdeg_hist = web_like_hist();
    let synth = SynthSpec {
        n: 100_000,
        alpha: 1.1,
        d: histogram_mean(&outdeg_hist),
        outdeg_hist,
        seed: 8,
        indegree: Default::default(),
    };
    let write = |g: &Graph| {
        let mut buf = Vec::new();
        prtail_core::graph::write_edge_list(g, &mut buf).unwrap();
        buf
    };
    let g1 = write(&generate(&synth).unwrap().graph);
    let g2 = write(&generate(&synth).unwrap().graph);
    let graphs_equal = g1 == g2;
    let threaded = prtail_core::synth::generate_with_threads(&synth, 2).unwrap();
    let threads_equal = write(&threaded.graph) == g1;
    Outcome::new(
        pools_equal && graphs_equal,
        format!(
            "pools byte-identical: {pools_equal}; edge lists byte-identical: {graphs_equal}; \
             also identical with 2 threads: {threads_equal}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("coefficient golden values", criterion_1),
        ("PageRank vs dense solve", criterion_2),
        ("simulator tail law", criterion_3),
        ("mean-field affine law", criterion_4),
        ("martingale levels", criterion_5),
        ("synthetic end-to-end", criterion_6),
        ("estimator sanity", criterion_7),
        ("determinism", criterion_8),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failures += 1;
        }
        println!(
            "[{status}] criterion {id} ({name}): {} [{:.1}s]",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
