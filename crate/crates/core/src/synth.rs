//! Random directed graphs with a heavy-tailed in-degree law and a prescribed
//! out-degree histogram.
//!
//! Every node draws an in-degree (mixed Poisson by default) and an
//! out-degree class `j` from `p_j`. Each in-stub of node `i` then picks its
//! source independently with probability proportional to the source's class,
//! so the class of the source of a uniformly random edge follows
//! `q_j = j p_j / d`. Realized out-degrees are edge counts and scatter around
//! the classes; the realized [`DegreeProfile`] is what downstream comparisons
//! should use.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{
    degree_profile, histogram_mass, histogram_mean, DegreeProfile, Graph, Histogram, NodeId,
};
use crate::parallel::with_threads;
use crate::sim::{synth_rng, DiscreteSampler, InDegreeLaw};
use crate::{Error, Result};

pub const MIN_NODES: usize = 1000;

/// Self-loop draws are repeated at most this many times, then accepted.
pub const SELF_LOOP_RETRIES: usize = 100;

/// Nodes per RNG stream.
const CHUNK: usize = 4096;

const PHASE_INDEGREE: u64 = 0;
const PHASE_CLASS: u64 = 1;
const PHASE_WIRING: u64 = 2;

/// In-degree law of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InDegreeModel {
    /// `N(T)` with Pareto rate of index `alpha` and mean `d`.
    #[default]
    MixedPoisson,
    /// Every node receives exactly `value` in-links.
    Constant { value: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub alpha: f64,
    /// Target mean degree.
    pub d: f64,
    pub outdeg_hist: Histogram,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub indegree: InDegreeModel,
}

impl SynthSpec {
    /// Checks the spec and returns the mean in-degree to target together with
    /// any warnings.
    pub fn validate(&self) -> Result<(f64, Vec<String>)> {
        let mut problems = Vec::new();
        let mut warnings = Vec::new();
        if self.n < MIN_NODES {
            problems.push(format!("n: must be at least {MIN_NODES}, got {}", self.n));
        }
        if self.n > NodeId::MAX as usize {
            problems.push(format!("n: {} exceeds the u32 id space", self.n));
        }
        if self.indegree == InDegreeModel::MixedPoisson
            && !(self.alpha > 1.0 && self.alpha.is_finite())
        {
            problems.push(format!("alpha: must exceed 1, got {}", self.alpha));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            problems.push(format!("d: must be positive, got {}", self.d));
        }
        if self.outdeg_hist.values().any(|&p| !(p >= 0.0)) {
            problems.push("outdeg_hist: negative or NaN entry".to_string());
        }
        let mass = histogram_mass(&self.outdeg_hist);
        if (mass - 1.0).abs() > 1e-9 {
            problems.push(format!("outdeg_hist: sums to {mass}, expected 1"));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let mean = histogram_mean(&self.outdeg_hist);
        let mut target = self.d;
        if (mean - self.d).abs() > 1e-6 * self.d {
            if !(mean > 0.0) {
                return Err(Error::Validation(vec![
                    "outdeg_hist: all mass at out-degree 0".to_string(),
                ]));
            }
            warnings.push(format!(
                "out-degree histogram mean {mean} differs from d = {}; using {mean} as the target mean in-degree",
                self.d
            ));
            target = mean;
        }
        Ok((target, warnings))
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub graph: Graph,
    /// Out-degree class assigned to every node.
    pub out_class: Vec<u64>,
    /// Mean in-degree the generator aimed for.
    pub target_d: f64,
    pub realized: DegreeProfile,
    pub warnings: Vec<String>,
}

/// JSON document written next to a generated edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub spec: SynthSpec,
    pub target_d: f64,
    pub realized: DegreeProfile,
    pub warnings: Vec<String>,
}

impl SynthOutput {
    pub fn sidecar(&self, spec: &SynthSpec) -> SynthSidecar {
        SynthSidecar {
            spec: spec.clone(),
            target_d: self.target_d,
            realized: self.realized.clone(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn write_sidecar(&self, spec: &SynthSpec, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &self.sidecar(spec))?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Generates a graph single-threaded.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    generate_with_threads(spec, 1)
}

/// Generates a graph; the output does not depend on `threads`.
pub fn generate_with_threads(spec: &SynthSpec, threads: usize) -> Result<SynthOutput> {
    let (target_d, warnings) = spec.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    with_threads(threads, || build(spec, target_d, warnings))?
}

fn draw_per_node<F>(n: usize, seed: u64, phase: u64, f: F) -> Vec<u64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> u64 + Sync,
{
    let mut out = vec![0u64; n];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk, slots)| {
            let mut rng = synth_rng(seed, phase, chunk as u64);
            for s in slots {
                *s = f(&mut rng);
            }
        });
    out
}

fn build(spec: &SynthSpec, target_d: f64, warnings: Vec<String>) -> Result<SynthOutput> {
    let n = spec.n;
    let in_deg = match spec.indegree {
        InDegreeModel::MixedPoisson => {
            let law = InDegreeLaw::new(spec.alpha, target_d)?;
            draw_per_node(n, spec.seed, PHASE_INDEGREE, |rng| law.sample(rng))
        }
        InDegreeModel::Constant { value } => vec![value; n],
    };
    let classes = DiscreteSampler::outdegree(&spec.outdeg_hist)?;
    let out_class = draw_per_node(n, spec.seed, PHASE_CLASS, |rng| classes.sample(rng));

    let stubs: u64 = in_deg.iter().sum();
    let sources = match DiscreteSampler::new(
        out_class
            .iter()
            .enumerate()
            .map(|(i, &j)| (i as u64, j as f64)),
    ) {
        Ok(s) => Some(s),
        Err(_) if stubs == 0 => None,
        Err(_) => {
            return Err(Error::Degenerate(format!(
                "{stubs} in-stubs but every node drew out-degree class 0"
            )))
        }
    };

    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(stubs as usize);
    if let Some(sources) = sources {
        let chunks: Vec<Vec<(NodeId, NodeId)>> = in_deg
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(chunk, degs)| {
                let mut rng = synth_rng(spec.seed, PHASE_WIRING, chunk as u64);
                let mut local = Vec::with_capacity(degs.iter().sum::<u64>() as usize);
                for (offset, &k) in degs.iter().enumerate() {
                    let dst = (chunk * CHUNK + offset) as u64;
                    for _ in 0..k {
                        let mut src = sources.sample(&mut rng);
                        let mut tries = 0;
                        while src == dst && tries < SELF_LOOP_RETRIES {
                            src = sources.sample(&mut rng);
                            tries += 1;
                        }
                        local.push((src as NodeId, dst as NodeId));
                    }
                }
                local
            })
            .collect();
        for c in chunks {
            edges.extend(c);
        }
    }

    let graph = Graph::from_edges(n, &edges)?;
    let realized = degree_profile(&graph);
    Ok(SynthOutput {
        graph,
        out_class,
        target_d,
        realized,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn spec(n: usize, alpha: f64, hist: &[(u64, f64)]) -> SynthSpec {
        let outdeg_hist: Histogram = hist.iter().copied().collect();
        SynthSpec {
            n,
            alpha,
            d: histogram_mean(&outdeg_hist),
            outdeg_hist,
            seed: 7,
            indegree: InDegreeModel::MixedPoisson,
        }
    }

    #[test]
    fn unit_classes_and_unit_indegrees() {
        let mut s = spec(2000, 2.0, &[(1, 1.0)]);
        s.indegree = InDegreeModel::Constant { value: 1 };
        let out = generate(&s).unwrap();
        assert_eq!(out.realized.m, 2000);
        assert_eq!(out.realized.d, 1.0);
        assert!(out.graph.in_degrees().iter().all(|&k| k == 1));
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn mean_in_and_out_degree_coincide() {
        let out = generate(&spec(5000, 1.5, &[(0, 0.2), (2, 0.5), (5, 0.3)])).unwrap();
        let g = &out.graph;
        let total_in: u64 = g.in_degrees().iter().sum();
        let total_out: u64 = g.out_degrees().iter().sum();
        assert_eq!(total_in, total_out);
        assert_eq!(total_in as usize, out.realized.m);
    }

    #[test]
    fn self_loops_are_rare() {
        let out = generate(&spec(3000, 2.0, &[(1, 0.5), (3, 0.5)])).unwrap();
        let loops = out.graph.edges().filter(|(s, d)| s == d).count();
        assert_eq!(loops, 0);
    }

    #[test]
    fn dangling_only_classes_are_rejected() {
        let mut s = spec(1000, 2.0, &[(0, 1.0)]);
        s.d = 1.0;
        assert!(matches!(generate(&s), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_capacity_with_in_stubs_is_an_error() {
        // Practically every node draws class 0, so the in-stubs have no source.
        let mut s = spec(1000, 2.0, &[(0, 1.0 - 1e-9), (1, 1e-9)]);
        s.indegree = InDegreeModel::Constant { value: 1 };
        match generate(&s) {
            Err(Error::Degenerate(msg)) => assert!(msg.contains("in-stubs")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_histogram_rescales_with_warning() {
        let mut s = spec(2000, 2.0, &[(1, 0.5), (3, 0.5)]);
        s.d = 4.0;
        let out = generate(&s).unwrap();
        assert_eq!(out.target_d, 2.0);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn validation_lists_fields() {
        let s = SynthSpec {
            n: 10,
            alpha: 0.5,
            d: -1.0,
            outdeg_hist: BTreeMap::from([(1, 0.5)]),
            seed: 0,
            indegree: InDegreeModel::MixedPoisson,
        };
        match s.validate() {
            Err(Error::Validation(p)) => assert_eq!(p.len(), 4, "{p:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn class_fractions_follow_histogram() {
        let s = spec(200_000, 2.0, &[(0, 0.1), (1, 0.3), (4, 0.6)]);
        let out = generate(&s).unwrap();
        let n = s.n as f64;
        let zeros = out.out_class.iter().filter(|&&j| j == 0).count() as f64 / n;
        let se = (0.1f64 * 0.9 / n).sqrt();
        assert!((zeros - 0.1).abs() < 3.0 * se, "{zeros}");
    }

    #[test]
    fn realized_dangling_fraction_includes_unpicked_nodes() {
        // A class-j node receives Poisson(j * lambda) out-links with
        // lambda = m / (n d), so it stays dangling with probability
        // exp(-j lambda).
        let s = spec(200_000, 3.0, &[(0, 0.1), (1, 0.3), (4, 0.6)]);
        let out = generate(&s).unwrap();
        let lambda = out.realized.m as f64 / (s.n as f64 * s.d);
        let expected: f64 = s
            .outdeg_hist
            .iter()
            .map(|(&j, &p)| p * (-(j as f64) * lambda).exp())
            .sum();
        let se = (expected * (1.0 - expected) / s.n as f64).sqrt();
        assert!(
            (out.realized.p0 - expected).abs() < 3.0 * se,
            "{} vs {expected}",
            out.realized.p0
        );
    }

    #[test]
    fn source_classes_are_size_biased() {
        let s = spec(200_000, 2.5, &[(0, 0.1), (1, 0.3), (4, 0.6)]);
        let out = generate(&s).unwrap();
        let m = out.realized.m as f64;
        let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
        for (src, _) in out.graph.edges() {
            *counts.entry(out.out_class[src as usize]).or_default() += 1.0;
        }
        assert!(!counts.contains_key(&0));
        for (&j, &p) in s.outdeg_hist.iter().filter(|(&j, _)| j > 0) {
            let q = j as f64 * p / s.d;
            let freq = counts.get(&j).copied().unwrap_or(0.0) / m;
            // Edges are not independent (shared sources), so allow the
            // multinomial error of the node-level class draw as well.
            let sigma = (q * (1.0 - q) / m).sqrt() + (q * (1.0 - q) / s.n as f64).sqrt();
            assert!((freq - q).abs() < 3.0 * sigma, "j={j}: {freq} vs {q}");
        }
    }

    #[test]
    fn mean_degree_at_finite_variance() {
        let s = spec(200_000, 2.5, &[(0, 0.1), (2, 0.5), (6, 0.4)]);
        let out = generate(&s).unwrap();
        assert!(
            (out.realized.d / s.d - 1.0).abs() < 0.02,
            "{}",
            out.realized.d
        );
    }

    #[test]
    fn heavy_tail_exponent_is_recovered() {
        let s = spec(300_000, 1.1, &[(0, 0.1), (2, 0.5), (6, 0.4)]);
        let out = generate(&s).unwrap();
        let in_deg: Vec<f64> = out.graph.in_degrees().iter().map(|&k| k as f64).collect();
        let fit = crate::tail::fit_exponent_mle(&in_deg, 100.0).unwrap();
        assert!((fit.alpha_hat - 1.1).abs() < 0.05, "{}", fit.alpha_hat);
    }

    #[test]
    fn identical_seeds_give_identical_graphs() {
        let s = spec(20_000, 1.3, &[(0, 0.1), (2, 0.5), (6, 0.4)]);
        let a = generate(&s).unwrap();
        let b = generate_with_threads(&s, 2).unwrap();
        assert_eq!(a.graph, b.graph);
        let mut other = s.clone();
        other.seed += 1;
        assert_ne!(generate(&other).unwrap().graph, a.graph);
    }

    #[test]
    fn sidecar_round_trips() {
        let s = spec(1000, 2.0, &[(1, 0.5), (3, 0.5)]);
        let out = generate(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        out.write_sidecar(&s, &path).unwrap();
        let back: SynthSidecar =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back.spec, s);
        assert_eq!(back.realized.m, out.realized.m);
    }
}
