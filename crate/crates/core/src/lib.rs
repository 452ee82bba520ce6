//! Heavy-tailed PageRank toolkit.
//!
//! The crate covers the whole chain from a directed edge list to a
//! quantitative statement about the PageRank tail:
//!
//! - [`graph`]: edge-list loading into an in-adjacency layout, degree
//!   statistics and the size-biased effective out-degree law.
//! - [`pagerank`]: scale-free PageRank (population mean 1) by Jacobi power
//!   iteration with explicit dangling-mass redistribution and per-iteration
//!   snapshots.
//! - [`tail`]: empirical CCDFs, the continuous power-law MLE and slope-pinned
//!   log-log intercepts.
//! - [`theory`]: closed-form tail coefficients `b`, `C_k`, `C` and its lower
//!   bound, the mean-field line and predicted PageRank lines.
//! - [`sim`]: population-dynamics Monte Carlo for the stochastic recursion
//!   `R = c * sum_{j<=N} R_j / D_j + 1 - c(1 - p0)` and Galton-Watson level
//!   weights.
//! - [`synth`]: random directed graphs with mixed-Poisson in-degrees and a
//!   prescribed out-degree histogram.
//! - [`report`]: the analysis pipeline and the serializable reports used by
//!   the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod pagerank;
mod parallel;
pub mod report;
pub mod sim;
pub mod synth;
pub mod tail;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{
    degree_profile, effective_outdegree_dist, load_edge_list, load_edge_list_path, DegreeProfile,
    EdgeListFormat, EffectiveOutDegree, Graph,
};
pub use pagerank::{dangling_mass_fraction, pagerank, PageRankParams, PageRankResult};
pub use sim::{ModelSpec, SamplePool};
pub use synth::{generate, SynthSpec};
pub use tail::{ccdf, choose_xmin, fit_exponent_mle, CcdfSeries, TailFit};
pub use theory::{CoefficientTable, TheoryParams};
