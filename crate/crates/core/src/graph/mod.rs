//! Directed multigraphs stored by in-links.
//!
//! Power iteration gathers over the in-links of each node, so the primary
//! layout is a compressed in-adjacency: `in_offsets[i]..in_offsets[i + 1]`
//! indexes the sources of all edges `j -> i` in `in_sources`. Repeated edges
//! and self-loops are ordinary entries; each one contributes a term to the
//! PageRank sum and a unit to the source's out-degree.

mod degree;
mod io;

pub use degree::{
    degree_profile, effective_outdegree_dist, histogram_mass, histogram_mean, DegreeProfile,
    EffectiveOutDegree, Histogram,
};
pub use io::{load_edge_list, load_edge_list_path, write_edge_list, Compression, EdgeListFormat};

use crate::{Error, Result};

/// Node index in the dense id space `0..n`.
pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    out_deg: Vec<u64>,
    ids: Vec<u64>,
}

impl Graph {
    /// Builds a graph on nodes `0..n` whose original ids are the indices
    /// themselves. Edges are `(source, destination)` pairs.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::with_ids((0..n as u64).collect(), edges)
    }

    /// Builds a graph whose node `i` carries the external id `ids[i]`.
    pub fn with_ids(ids: Vec<u64>, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let n = ids.len();
        if n > NodeId::MAX as usize {
            return Err(Error::invalid(format!("{n} nodes exceed the u32 id space")));
        }
        let mut out_deg = vec![0u64; n];
        let mut in_counts = vec![0usize; n + 1];
        for &(src, dst) in edges {
            let (s, d) = (src as usize, dst as usize);
            if s >= n || d >= n {
                return Err(Error::invalid(format!(
                    "edge ({src}, {dst}) references a node outside 0..{n}"
                )));
            }
            out_deg[s] += 1;
            in_counts[d + 1] += 1;
        }
        for i in 0..n {
            in_counts[i + 1] += in_counts[i];
        }
        let in_offsets = in_counts;
        // Stable counting sort: in-lists keep input order.
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![0; edges.len()];
        for &(src, dst) in edges {
            let slot = &mut cursor[dst as usize];
            in_sources[*slot] = src;
            *slot += 1;
        }
        Ok(Self {
            in_offsets,
            in_sources,
            out_deg,
            ids,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.out_deg.len()
    }

    pub fn num_edges(&self) -> usize {
        self.in_sources.len()
    }

    /// Sources of the edges pointing at `node`, one entry per edge.
    #[inline]
    pub fn in_neighbors(&self, node: NodeId) -> &[NodeId] {
        let i = node as usize;
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    #[inline]
    pub fn in_degree(&self, node: NodeId) -> u64 {
        let i = node as usize;
        (self.in_offsets[i + 1] - self.in_offsets[i]) as u64
    }

    #[inline]
    pub fn out_degree(&self, node: NodeId) -> u64 {
        self.out_deg[node as usize]
    }

    pub fn out_degrees(&self) -> &[u64] {
        &self.out_deg
    }

    pub fn in_degrees(&self) -> Vec<u64> {
        self.in_offsets
            .windows(2)
            .map(|w| (w[1] - w[0]) as u64)
            .collect()
    }

    pub fn is_dangling(&self, node: NodeId) -> bool {
        self.out_deg[node as usize] == 0
    }

    /// Nodes with out-degree zero.
    pub fn dangling_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.out_deg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i as NodeId)
    }

    /// External id of `node`, as it appeared in the input.
    pub fn original_id(&self, node: NodeId) -> u64 {
        self.ids[node as usize]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.ids
    }

    /// All edges as `(source, destination)`, grouped by destination.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.num_nodes() as NodeId)
            .flat_map(move |dst| self.in_neighbors(dst).iter().map(move |&src| (src, dst)))
    }
}
