//! Scale-free PageRank by power iteration.
//!
//! Scores are normalized so that their population mean is 1, i.e.
//! `R(i) = n * PR(i)`. One Jacobi step maps `R` to
//!
//! ```text
//! R'(i) = c * sum_{j -> i} R(j) / d_j  +  (c / n) * sum_{j dangling} R(j)  +  (1 - c)
//! ```
//!
//! starting from `R ≡ 1`, so iteration `k` is a pure function of iteration
//! `k - 1` and snapshots line up with the k-th step of the stochastic
//! recursion in [`crate::sim`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufWriter, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId};
use crate::parallel::with_threads;
use crate::{Error, Result};

/// Destinations per parallel work unit.
const GATHER_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    /// Damping factor `c` in (0, 1).
    pub damping: f64,
    /// Stop once `(1/n) * sum_i |R_k(i) - R_{k-1}(i)| <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Iterations whose full score vector is retained. `0` is the initial vector.
    pub snapshot_iters: BTreeSet<usize>,
    pub threads: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-10,
            max_iters: 200,
            snapshot_iters: BTreeSet::new(),
            threads: 1,
        }
    }
}

impl PageRankParams {
    pub fn with_damping(damping: f64) -> Self {
        Self {
            damping,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.damping > 0.0 && self.damping < 1.0) {
            problems.push(format!("damping must lie in (0, 1), got {}", self.damping));
        }
        if !(self.tol > 0.0) {
            problems.push(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            problems.push("max_iters must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankResult {
    /// Final scale-free scores, mean 1.
    pub scores: Vec<f64>,
    pub iters_run: usize,
    pub converged: bool,
    /// L1 change (per node) of every iteration; `residuals[k - 1]` belongs to iteration `k`.
    pub residuals: Vec<f64>,
    pub snapshots: BTreeMap<usize, Vec<f64>>,
}

impl PageRankResult {
    /// Score vector retained after iteration `k`.
    pub fn snapshot(&self, k: usize) -> Result<&[f64]> {
        if k > self.iters_run {
            return Err(Error::MissingSnapshot(k));
        }
        self.snapshots
            .get(&k)
            .map(Vec::as_slice)
            .ok_or(Error::MissingSnapshot(k))
    }

    pub fn mean_score(&self) -> f64 {
        mean(&self.scores)
    }
}

/// Same as [`PageRankResult::snapshot`].
pub fn iteration_snapshot(result: &PageRankResult, k: usize) -> Result<&[f64]> {
    result.snapshot(k)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(1/n) * sum_{j dangling} R(j)`.
pub fn dangling_mass_fraction(scores: &[f64], g: &Graph) -> f64 {
    g.dangling_nodes().map(|j| scores[j as usize]).sum::<f64>() / g.num_nodes() as f64
}

pub fn pagerank(g: &Graph, params: &PageRankParams) -> Result<PageRankResult> {
    params.validate()?;
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::invalid("graph has no nodes"));
    }
    let threads = params.threads;
    with_threads(threads, || power_iterate(g, params, threads > 1))?
}

fn power_iterate(g: &Graph, params: &PageRankParams, parallel: bool) -> Result<PageRankResult> {
    let n = g.num_nodes();
    let c = params.damping;
    let inv_out: Vec<f64> = g
        .out_degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();
    let dangling: Vec<NodeId> = g.dangling_nodes().collect();

    let mut current = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut share = vec![0.0; n];
    let mut snapshots = BTreeMap::new();
    if params.snapshot_iters.contains(&0) {
        snapshots.insert(0, current.clone());
    }
    let mut residuals = Vec::new();
    let mut converged = false;

    for k in 1..=params.max_iters {
        for ((s, &r), &inv) in share.iter_mut().zip(&current).zip(&inv_out) {
            *s = r * inv;
        }
        let dangling_sum: f64 = dangling.iter().map(|&j| current[j as usize]).sum();
        let base = c * dangling_sum / n as f64 + (1.0 - c);
        let gather = |i: usize, slot: &mut f64| {
            let sum: f64 = g
                .in_neighbors(i as NodeId)
                .iter()
                .map(|&j| share[j as usize])
                .sum();
            *slot = c * sum + base;
        };
        if parallel {
            next.par_chunks_mut(GATHER_CHUNK)
                .enumerate()
                .for_each(|(chunk, slots)| {
                    let start = chunk * GATHER_CHUNK;
                    for (offset, slot) in slots.iter_mut().enumerate() {
                        gather(start + offset, slot);
                    }
                });
        } else {
            for (i, slot) in next.iter_mut().enumerate() {
                gather(i, slot);
            }
        }

        let residual = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / n as f64;
        residuals.push(residual);
        std::mem::swap(&mut current, &mut next);
        if params.snapshot_iters.contains(&k) {
            snapshots.insert(k, current.clone());
        }
        if residual <= params.tol {
            converged = true;
            break;
        }
    }

    Ok(PageRankResult {
        iters_run: residuals.len(),
        scores: current,
        converged,
        residuals,
        snapshots,
    })
}

/// Writes `node_id,score` rows keyed by the graph's original ids.
pub fn write_scores_csv<W: Write>(g: &Graph, scores: &[f64], sink: W) -> Result<()> {
    let mut w = BufWriter::new(sink);
    writeln!(w, "node_id,score")?;
    for (i, s) in scores.iter().enumerate() {
        writeln!(w, "{},{}", g.original_id(i as NodeId), s)?;
    }
    w.flush()?;
    Ok(())
}
