//! Monte Carlo for the PageRank stochastic recursion.
//!
//! The scale-free PageRank of a random page is modelled by
//!
//! ```text
//! R_k  =d  c * sum_{j=1}^{N} R_{k-1,j} / D_j  +  1 - c (1 - p0)
//! ```
//!
//! with `N` a mixed-Poisson in-degree, `D_j` i.i.d. effective out-degrees
//! (`P(D = j) = j p_j / d`) and `R_{k-1,j}` i.i.d. copies of the previous
//! iterate. Starting from `R_0 ≡ 1`, `R_k` stands for the k-th power
//! iteration.
//!
//! [`Simulator`] solves the recursion by population dynamics: a pool of `M`
//! samples of `R_{k-1}` is resampled with replacement to build `R_k`. The
//! Galton-Watson level weights `Y^(n)` are expanded exactly per sample in
//! [`tree`].
//!
//! Randomness is drawn from ChaCha8 streams keyed by `(seed, generation,
//! chunk)`, with fixed-size chunks, so output is identical for any thread
//! count.

mod meanfield;
mod sampler;
pub mod tree;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use meanfield::{binned_conditional_means, fit_affine, AffineFit, ConditionalMean};
pub use sampler::{DiscreteSampler, InDegreeLaw};
pub use tree::{simulate_y_level, LevelSamples};

use crate::graph::{histogram_mass, histogram_mean, Histogram};
use crate::parallel::with_threads;
use crate::theory::TheoryParams;
use crate::{Error, Result};

pub const MIN_POOL_SIZE: usize = 10_000;
pub const DEFAULT_POOL_SIZE: usize = 1_000_000;

/// Samples per RNG stream.
const CHUNK: usize = 4096;

const STREAM_POOL: u64 = 1;
const STREAM_TREE: u64 = 2;
const STREAM_SYNTH: u64 = 3;

pub(crate) fn stream_rng(seed: u64, tag: u64, major: u64, minor: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) ^ (major << 24) ^ minor);
    rng
}

pub(crate) fn synth_rng(seed: u64, phase: u64, chunk: u64) -> ChaCha8Rng {
    stream_rng(seed, STREAM_SYNTH, phase, chunk)
}

fn default_pool_size() -> usize {
    DEFAULT_POOL_SIZE
}

/// Parameters of the recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Damping factor in `[0, 1)`; `0` collapses every sample to 1.
    pub c: f64,
    /// Tail index of the in-degree rate `T`.
    pub alpha: f64,
    /// Mean in-degree, equal to the out-degree histogram mean.
    pub d: f64,
    /// Out-degree histogram `p_j`, including `p_0`.
    pub outdeg_hist: Histogram,
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.c >= 0.0 && self.c < 1.0) {
            problems.push(format!("c: must lie in [0, 1), got {}", self.c));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            problems.push(format!("alpha: must exceed 1, got {}", self.alpha));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            problems.push(format!("d: must be positive, got {}", self.d));
        }
        if self.pool_size < MIN_POOL_SIZE {
            problems.push(format!(
                "pool_size: must be at least {MIN_POOL_SIZE}, got {}",
                self.pool_size
            ));
        }
        let mass = histogram_mass(&self.outdeg_hist);
        if (mass - 1.0).abs() > 1e-9 {
            problems.push(format!("outdeg_hist: sums to {mass}, expected 1"));
        }
        if self.outdeg_hist.values().any(|&p| !(p >= 0.0)) {
            problems.push("outdeg_hist: negative or NaN entry".to_string());
        }
        let mean = histogram_mean(&self.outdeg_hist);
        if !(mean > 0.0) {
            problems.push("outdeg_hist: all mass at out-degree 0".to_string());
        } else if (mean - self.d).abs() > 1e-6 * self.d {
            problems.push(format!(
                "outdeg_hist: mean {mean} differs from d = {}",
                self.d
            ));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        if self.c > 0.0 {
            TheoryParams::from_histogram(self.c, self.alpha, self.d, &self.outdeg_hist)?;
        }
        Ok(())
    }

    pub fn p0(&self) -> f64 {
        self.outdeg_hist.get(&0).copied().unwrap_or(0.0)
    }

    /// Additive constant `1 - c (1 - p0)`, also the smallest possible sample.
    pub fn floor(&self) -> f64 {
        1.0 - self.c * (1.0 - self.p0())
    }

    /// Theory parameters, or `None` when `c = 0`.
    pub fn theory(&self) -> Option<TheoryParams> {
        (self.c > 0.0)
            .then(|| TheoryParams::from_histogram(self.c, self.alpha, self.d, &self.outdeg_hist))
            .and_then(Result::ok)
    }
}

/// One generation of samples of `R_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePool {
    pub values: Vec<f64>,
    pub generation: usize,
}

impl SamplePool {
    /// `R_0 ≡ 1`.
    pub fn ones(size: usize) -> Self {
        Self {
            values: vec![1.0; size],
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sorted(&self) -> SortedSample {
        SortedSample::new(&self.values)
    }

    /// Little-endian bytes of every value, for exact comparisons.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

/// Ascending copy of a sample for CCDF and quantile queries.
#[derive(Debug, Clone)]
pub struct SortedSample(Vec<f64>);

impl SortedSample {
    pub fn new(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_unstable_by(f64::total_cmp);
        Self(v)
    }

    /// Fraction of samples strictly greater than `x`.
    pub fn ccdf(&self, x: f64) -> f64 {
        let le = self.0.partition_point(|&v| v <= x);
        (self.0.len() - le) as f64 / self.0.len() as f64
    }

    /// Value below which a fraction `q` of the samples lie.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.0.len();
        let i = ((q * n as f64) as usize).min(n - 1);
        self.0[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `count` points log-spaced over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 || lo == hi {
        return vec![lo; count];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Run exactly this many generations.
    Generations(usize),
    /// Run until the CCDF at the probe points moves by less than `tolerance`
    /// between consecutive generations.
    Converged {
        tolerance: f64,
        max_generations: usize,
    },
}

impl StopRule {
    pub const CONVERGED: StopRule = StopRule::Converged {
        tolerance: 1e-3,
        max_generations: 200,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub stop: StopRule,
    /// Generations whose pools are kept in [`SimulationRun::kept`].
    pub keep: BTreeSet<usize>,
    pub threads: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            stop: StopRule::CONVERGED,
            keep: BTreeSet::new(),
            threads: 1,
        }
    }
}

/// Number of CCDF probes used by the convergence rule.
pub const CONVERGENCE_PROBES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub mean: f64,
    pub min: f64,
    /// Largest CCDF change at the probe points versus the previous generation.
    pub max_ccdf_change: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub pool: SamplePool,
    pub history: Vec<GenerationStats>,
    /// Convergence probe points (empty for fixed-generation runs).
    pub probes: Vec<f64>,
    pub kept: BTreeMap<usize, SamplePool>,
}

impl SimulationRun {
    pub fn converged_generation(&self) -> usize {
        self.pool.generation
    }
}

/// Population-dynamics solver for one [`ModelSpec`].
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: ModelSpec,
    indegree: InDegreeLaw,
    outdegree: DiscreteSampler,
    floor: f64,
}

impl Simulator {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            indegree: InDegreeLaw::new(spec.alpha, spec.d)?,
            outdegree: DiscreteSampler::effective_outdegree(&spec.outdeg_hist)?,
            floor: spec.floor(),
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn indegree_law(&self) -> &InDegreeLaw {
        &self.indegree
    }

    pub fn outdegree_law(&self) -> &DiscreteSampler {
        &self.outdegree
    }

    /// One draw of `c * sum_{j<=N} R_j / D_j + floor` with `R_j` drawn from
    /// `previous`; returns the sample and `N`.
    #[inline]
    fn draw<R: Rng>(&self, previous: &[f64], rng: &mut R) -> (f64, u64) {
        let n = self.indegree.sample(rng);
        let mut sum = 0.0;
        for _ in 0..n {
            let d = self.outdegree.sample(rng);
            let r = previous[rng.random_range(0..previous.len())];
            sum += r / d as f64;
        }
        (self.spec.c * sum + self.floor, n)
    }

    fn fill(&self, previous: &SamplePool, values: &mut [f64], indegrees: Option<&mut [u64]>) {
        let generation = previous.generation as u64 + 1;
        let seed = self.spec.seed;
        let prev = previous.values.as_slice();
        if self.spec.c == 0.0 {
            values.fill(1.0);
            return;
        }
        let work = |chunk: usize, out: &mut [f64], mut ns: Option<&mut [u64]>| {
            let mut rng = stream_rng(seed, STREAM_POOL, generation, chunk as u64);
            for (i, slot) in out.iter_mut().enumerate() {
                let (r, n) = self.draw(prev, &mut rng);
                *slot = r;
                if let Some(ns) = ns.as_deref_mut() {
                    ns[i] = n;
                }
            }
        };
        match indegrees {
            Some(ns) => values
                .par_chunks_mut(CHUNK)
                .zip(ns.par_chunks_mut(CHUNK))
                .enumerate()
                .for_each(|(chunk, (out, ns))| work(chunk, out, Some(ns))),
            None => values
                .par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(chunk, out)| work(chunk, out, None)),
        }
    }

    /// Builds generation `k + 1` from generation `k`.
    pub fn iterate(&self, previous: &SamplePool) -> SamplePool {
        let mut values = vec![0.0; self.spec.pool_size];
        self.fill(previous, &mut values, None);
        SamplePool {
            values,
            generation: previous.generation + 1,
        }
    }

    /// As [`Simulator::iterate`], also returning each sample's in-degree `N`.
    pub fn iterate_paired(&self, previous: &SamplePool) -> (SamplePool, Vec<u64>) {
        let mut values = vec![0.0; self.spec.pool_size];
        let mut indegrees = vec![0; self.spec.pool_size];
        self.fill(previous, &mut values, Some(&mut indegrees));
        (
            SamplePool {
                values,
                generation: previous.generation + 1,
            },
            indegrees,
        )
    }

    /// Runs the recursion from `R_0 ≡ 1`.
    pub fn run(&self, opts: &SimulationOptions) -> Result<SimulationRun> {
        with_threads(opts.threads, || self.run_inner(opts))?
    }

    fn run_inner(&self, opts: &SimulationOptions) -> Result<SimulationRun> {
        let (limit, tolerance) = match opts.stop {
            StopRule::Generations(k) => (k, None),
            StopRule::Converged {
                tolerance,
                max_generations,
            } => (max_generations, Some(tolerance)),
        };
        let mut pool = SamplePool::ones(self.spec.pool_size);
        let mut history = Vec::new();
        let mut kept = BTreeMap::new();
        let mut probes = Vec::new();
        let mut last_ccdf: Vec<f64> = Vec::new();
        let mut last_change = f64::INFINITY;

        if opts.keep.contains(&0) {
            kept.insert(0, pool.clone());
        }
        for _ in 0..limit {
            pool = self.iterate(&pool);
            let mut stats = GenerationStats {
                generation: pool.generation,
                mean: pool.mean(),
                min: pool.min(),
                max_ccdf_change: None,
            };
            if opts.keep.contains(&pool.generation) {
                kept.insert(pool.generation, pool.clone());
            }
            if let Some(tol) = tolerance {
                let sorted = pool.sorted();
                if probes.is_empty() {
                    probes = log_spaced(
                        sorted.quantile(0.05),
                        sorted.quantile(1.0 - 1e-4),
                        CONVERGENCE_PROBES,
                    );
                }
                let ccdf: Vec<f64> = probes.iter().map(|&x| sorted.ccdf(x)).collect();
                if !last_ccdf.is_empty() {
                    last_change = ccdf
                        .iter()
                        .zip(&last_ccdf)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    stats.max_ccdf_change = Some(last_change);
                }
                last_ccdf = ccdf;
                log::debug!(
                    "generation {}: mean {:.4}, max CCDF change {:.2e}",
                    stats.generation,
                    stats.mean,
                    last_change
                );
                history.push(stats);
                if last_change < tol {
                    return Ok(SimulationRun {
                        pool,
                        history,
                        probes,
                        kept,
                    });
                }
            } else {
                history.push(stats);
            }
        }
        match tolerance {
            Some(tolerance) => Err(Error::NonConvergence {
                generations: limit,
                last_change,
                tolerance,
            }),
            None => Ok(SimulationRun {
                pool,
                history,
                probes,
                kept,
            }),
        }
    }
}

/// Draws one in-degree `N(T)` for `spec`.
pub fn sample_indegree<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Result<u64> {
    Ok(InDegreeLaw::new(spec.alpha, spec.d)?.sample(rng))
}

/// Draws one effective out-degree `D` with `P(D = j) = j p_j / d`.
pub fn sample_effective_outdegree<R: Rng>(outdeg_hist: &Histogram, rng: &mut R) -> Result<u64> {
    Ok(DiscreteSampler::effective_outdegree(outdeg_hist)?.sample(rng))
}

/// One population-dynamics step.
pub fn iterate_pool(pool: &SamplePool, spec: &ModelSpec) -> Result<SamplePool> {
    Ok(Simulator::new(spec)?.iterate(pool))
}

/// `k` generations from `R_0 ≡ 1`, or until convergence when `k` is `None`.
pub fn simulate_r(spec: &ModelSpec, k: Option<usize>) -> Result<SamplePool> {
    let stop = match k {
        Some(k) => StopRule::Generations(k),
        None => StopRule::CONVERGED,
    };
    let opts = SimulationOptions {
        stop,
        ..SimulationOptions::default()
    };
    Ok(Simulator::new(spec)?.run(&opts)?.pool)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRatio {
    pub x: f64,
    pub empirical: f64,
    /// `C * P(T > x)`.
    pub predicted: f64,
    pub ratio: f64,
}

/// CCDF band probed by [`tail_ratios`].
pub const TAIL_PROBE_BAND: (f64, f64) = (1e-5, 1e-3);

/// Ratio of the pool's empirical tail to `coefficient * P(T > x)` at
/// `count` log-spaced points whose empirical CCDF lies in `band`.
pub fn tail_ratios(
    sorted: &SortedSample,
    law: &InDegreeLaw,
    coefficient: f64,
    band: (f64, f64),
    count: usize,
) -> Vec<TailRatio> {
    let (lo, hi) = band;
    let x_start = sorted.quantile(1.0 - hi);
    let x_end = sorted.quantile(1.0 - lo);
    log_spaced(x_start, x_end, count)
        .into_iter()
        .filter_map(|x| {
            let empirical = sorted.ccdf(x);
            if !(lo..=hi).contains(&empirical) {
                return None;
            }
            let predicted = coefficient * law.rate_tail(x);
            Some(TailRatio {
                x,
                empirical,
                predicted,
                ratio: empirical / predicted,
            })
        })
        .collect()
}
