//! Level weights of the weighted branching tree.
//!
//! Unrolling the recursion `k` times writes `R_k` over a Galton-Watson tree:
//! the root has `N` children, every node has its own i.i.d. `N` children,
//! and each edge carries the weight `1 / D`. With `Y^(n)` the sum over the
//! nodes at depth `n` of the product of edge weights on their path,
//!
//! ```text
//! R_k = (1 - c (1 - p0)) * sum_{n < k} c^n Y^(n)  +  c^k Y^(k)
//! ```
//!
//! and `E Y^(n) = (1 - p0)^n`, so `Y^(n) / (1 - p0)^n` is a martingale.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stream_rng, DiscreteSampler, InDegreeLaw, ModelSpec, STREAM_TREE};
use crate::{Error, Result};

/// Default cap on the number of tree nodes expanded for one sample.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Trees per RNG stream.
const TREE_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSamples {
    /// `by_level[n][s]` is `Y^(n)` of the `s`-th completed tree.
    pub by_level: Vec<Vec<f64>>,
    /// Trees abandoned because they exceeded the node budget.
    pub aborted: usize,
    pub attempted: usize,
}

impl LevelSamples {
    /// Deepest level expanded.
    pub fn depth(&self) -> usize {
        self.by_level.len() - 1
    }

    pub fn completed(&self) -> usize {
        self.by_level[0].len()
    }

    pub fn level_values(&self, n: usize) -> &[f64] {
        &self.by_level[n]
    }

    pub fn level_mean(&self, n: usize) -> f64 {
        let v = &self.by_level[n];
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Standard error of [`LevelSamples::level_mean`].
    pub fn level_std_error(&self, n: usize) -> f64 {
        let v = &self.by_level[n];
        let m = self.level_mean(n);
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
        (var / v.len() as f64).sqrt()
    }

    pub fn abort_rate(&self) -> f64 {
        self.aborted as f64 / self.attempted as f64
    }

    /// `R_k` of every completed tree, rebuilt from its level weights.
    pub fn rank_values(&self, k: usize, c: f64, floor: f64) -> Vec<f64> {
        assert!(k <= self.depth(), "level {k} was not expanded");
        (0..self.completed())
            .map(|s| {
                let partial: f64 = (0..k).map(|n| c.powi(n as i32) * self.by_level[n][s]).sum();
                floor * partial + c.powi(k as i32) * self.by_level[k][s]
            })
            .collect()
    }
}

/// Expands `samples` independent trees to depth `level` and records
/// `Y^(0..=level)` for each. Trees that need more than `node_budget` nodes
/// are dropped and counted in [`LevelSamples::aborted`].
pub fn simulate_y_level(
    spec: &ModelSpec,
    level: usize,
    samples: usize,
    node_budget: Option<usize>,
) -> Result<LevelSamples> {
    spec.validate()?;
    if samples < 2 {
        return Err(Error::invalid("at least two trees are needed"));
    }
    let budget = node_budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let indegree = InDegreeLaw::new(spec.alpha, spec.d)?;
    let outdegree = DiscreteSampler::effective_outdegree(&spec.outdeg_hist)?;
    let chunks = samples.div_ceil(TREE_CHUNK);

    let trees: Vec<Option<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = stream_rng(spec.seed, STREAM_TREE, level as u64, chunk as u64);
            let count = TREE_CHUNK.min(samples - chunk * TREE_CHUNK);
            (0..count)
                .map(|_| expand(&indegree, &outdegree, level, budget, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut by_level = vec![Vec::with_capacity(samples); level + 1];
    let mut aborted = 0;
    for tree in trees {
        match tree {
            Some(ys) => {
                for (n, y) in ys.into_iter().enumerate() {
                    by_level[n].push(y);
                }
            }
            None => aborted += 1,
        }
    }
    if by_level[0].len() < 2 {
        return Err(Error::Degenerate(format!(
            "{aborted} of {samples} trees exceeded the node budget of {budget}"
        )));
    }
    if aborted > 0 {
        log::warn!("{aborted} of {samples} trees exceeded the node budget and were dropped");
    }
    Ok(LevelSamples {
        by_level,
        aborted,
        attempted: samples,
    })
}

fn expand<R: rand::Rng>(
    indegree: &InDegreeLaw,
    outdegree: &DiscreteSampler,
    level: usize,
    budget: usize,
    rng: &mut R,
) -> Option<Vec<f64>> {
    let mut ys = Vec::with_capacity(level + 1);
    ys.push(1.0);
    let mut frontier = vec![1.0];
    let mut next = Vec::new();
    let mut nodes = 1usize;
    for depth in 1..=level {
        let last = depth == level;
        let mut y = 0.0;
        next.clear();
        for &w in &frontier {
            let children = indegree.sample(rng);
            nodes = nodes.saturating_add(children as usize);
            if nodes > budget {
                return None;
            }
            for _ in 0..children {
                let child = w / outdegree.sample(rng) as f64;
                y += child;
                if !last {
                    next.push(child);
                }
            }
        }
        ys.push(y);
        std::mem::swap(&mut frontier, &mut next);
    }
    Some(ys)
}
