use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::{Error, Result};

/// Fractions indexed by degree; `hist[j]` is the share of nodes with degree `j`.
pub type Histogram = BTreeMap<u64, f64>;

/// Summary degree statistics of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub n: usize,
    pub m: usize,
    /// Mean degree `m / n`.
    pub d: f64,
    /// Fraction of dangling nodes.
    pub p0: f64,
    /// Out-degree histogram `p_j`.
    pub p_hist: Histogram,
    /// In-degree histogram.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub in_hist: Histogram,
}

fn fractions(counts: BTreeMap<u64, usize>, n: usize) -> Histogram {
    let n = n as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

pub fn degree_profile(g: &Graph) -> DegreeProfile {
    let n = g.num_nodes();
    let m = g.num_edges();
    let mut out_counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &d in g.out_degrees() {
        *out_counts.entry(d).or_default() += 1;
    }
    let mut in_counts: BTreeMap<u64, usize> = BTreeMap::new();
    for d in g.in_degrees() {
        *in_counts.entry(d).or_default() += 1;
    }
    let dangling = out_counts.get(&0).copied().unwrap_or(0);
    let p_hist = fractions(out_counts, n);
    DegreeProfile {
        n,
        m,
        d: m as f64 / n as f64,
        p0: dangling as f64 / n as f64,
        p_hist,
        in_hist: fractions(in_counts, n),
    }
}

/// Total mass `sum_j p_j`.
pub fn histogram_mass(hist: &Histogram) -> f64 {
    hist.values().sum()
}

/// Mean `sum_j j p_j`.
pub fn histogram_mean(hist: &Histogram) -> f64 {
    hist.iter().map(|(&j, &p)| j as f64 * p).sum()
}

/// Law of the out-degree of the source of a uniformly random edge,
/// `q_j = j p_j / d` for `j >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveOutDegree {
    pub probs: BTreeMap<u64, f64>,
}

impl EffectiveOutDegree {
    pub fn from_histogram(p_hist: &Histogram, d: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Degenerate(format!(
                "mean degree must be positive, got {d}"
            )));
        }
        let probs = p_hist
            .iter()
            .filter(|(&j, &p)| j > 0 && p > 0.0)
            .map(|(&j, &p)| (j, j as f64 * p / d))
            .collect::<BTreeMap<_, _>>();
        if probs.is_empty() {
            return Err(Error::Degenerate(
                "all out-degree mass sits at j = 0".into(),
            ));
        }
        Ok(Self { probs })
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// `E(1/D)`, which equals `(1 - p0) / d`.
    pub fn mean_inverse(&self) -> f64 {
        self.probs.iter().map(|(&j, &q)| q / j as f64).sum()
    }

    /// `E(D^-power)`.
    pub fn inverse_moment(&self, power: f64) -> f64 {
        self.probs
            .iter()
            .map(|(&j, &q)| q * (j as f64).powf(-power))
            .sum()
    }
}

pub fn effective_outdegree_dist(profile: &DegreeProfile) -> Result<EffectiveOutDegree> {
    EffectiveOutDegree::from_histogram(&profile.p_hist, profile.d)
}
