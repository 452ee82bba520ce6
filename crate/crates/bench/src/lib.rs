//! Inputs shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use prtail_core::graph::{histogram_mean, Histogram};
use prtail_core::sim::{InDegreeLaw, ModelSpec};
use prtail_core::synth::{generate, SynthSpec};
use prtail_core::Graph;

/// Out-degree histogram with mean 8.2 and 0.6% dangling nodes, shaped like a
/// small web crawl: `p_j ∝ j^-0.5 exp(-j / 12.8)` for `j = 1..=5000`.
pub fn web_like_hist() -> Histogram {
    let p0 = 0.006;
    let raw: Vec<(u64, f64)> = (1..=5000u64)
        .map(|j| {
            (
                j,
                (j as f64).powf(-0.49903088) * (-(j as f64) / 12.79230688540986).exp(),
            )
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    let mut hist: Histogram = raw
        .into_iter()
        .map(|(j, w)| (j, (1.0 - p0) * w / total))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    hist.insert(0, p0);
    hist
}

pub fn synthetic_graph(n: usize, alpha: f64, seed: u64) -> Graph {
    let outdeg_hist = web_like_hist();
    let spec = SynthSpec {
        n,
        alpha,
        d: histogram_mean(&outdeg_hist),
        outdeg_hist,
        seed,
        indegree: Default::default(),
    };
    generate(&spec).expect("valid synthesis spec").graph
}

pub fn model_spec(c: f64, alpha: f64, pool_size: usize) -> ModelSpec {
    let outdeg_hist = web_like_hist();
    ModelSpec {
        c,
        alpha,
        d: histogram_mean(&outdeg_hist),
        outdeg_hist,
        pool_size,
        seed: 1,
    }
}

/// Exact Pareto draws with unit scale.
pub fn pareto_samples(n: usize, alpha: f64, seed: u64) -> Vec<f64> {
    // Mean alpha / (alpha - 1) gives scale 1.
    let law = InDegreeLaw::new(alpha, alpha / (alpha - 1.0)).expect("alpha > 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| law.sample_rate(&mut rng)).collect()
}
