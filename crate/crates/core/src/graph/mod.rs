//! Undirected sparse weighted graphs: construction, ingestion, regional
//! aggregation, and connected-component extraction.
//!
//! A [`Graph`] is immutable after construction, so any number of detection or
//! analysis engines may read it concurrently.

mod edge_list;
mod region;

pub use edge_list::{load_edge_list, write_edge_list, Dedup, LoadOptions, LoadReport, SelfLoopPolicy};
pub use region::{aggregate_by_region, RegionInteractionLog};

use crate::{Error, Result};

/// One undirected edge, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Undirected weighted graph in adjacency-list form.
///
/// Self-loops never appear as edges. Per-node internal weight (same-region
/// interaction mass from aggregation, or Louvain aggregation self-weight) is
/// kept separately in `internal` and excluded from `degrees`.
#[derive(Debug, Clone)]
pub struct Graph {
    labels: Vec<String>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
    internal: Vec<f64>,
}

impl Graph {
    /// Build a graph from `n` nodes and an edge list. Duplicate pairs merge by
    /// weight sum; self-loops and negative weights are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_edges_labeled(labels, edges, vec![0.0; n])
    }

    /// As [`Graph::from_edges`], with explicit node labels and internal weights.
    pub fn from_edges_labeled(
        labels: Vec<String>,
        edges: &[(usize, usize, f64)],
        internal: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if internal.len() != n {
            return Err(Error::invalid("internal weight vector length mismatch"));
        }
        let mut canonical: Vec<Edge> = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop on node {i}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("edge ({i},{j}) has invalid weight {w}")));
            }
            canonical.push(Edge { a: i.min(j), b: i.max(j), weight: w });
        }
        canonical.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
        canonical.dedup_by(|next, prev| {
            if (prev.a, prev.b) == (next.a, next.b) {
                prev.weight += next.weight;
                true
            } else {
                false
            }
        });
        Ok(Self::from_canonical(labels, canonical, internal))
    }

    /// Assemble from an already canonical (sorted, deduplicated, a<b) edge list.
    pub(crate) fn from_canonical(labels: Vec<String>, edges: Vec<Edge>, internal: Vec<f64>) -> Self {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut degrees = vec![0.0; n];
        for e in &edges {
            adjacency[e.a].push((e.b, e.weight));
            adjacency[e.b].push((e.a, e.weight));
            degrees[e.a] += e.weight;
            degrees[e.b] += e.weight;
        }
        Graph { labels, edges, adjacency, degrees, internal }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Weighted degree of node `i`: the sum of incident edge weights.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Internal (within-node) weight of node `i`.
    pub fn internal(&self, i: usize) -> f64 {
        self.internal[i]
    }

    /// Sum of all edge weights, excluding internal weight.
    pub fn total_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Sum of all internal node weights.
    pub fn total_internal_weight(&self) -> f64 {
        self.internal.iter().sum()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// True when every edge has weight exactly 1 and no internal weight exists.
    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|e| e.weight == 1.0) && self.internal.iter().all(|&w| w == 0.0)
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count() <= 1 {
            return true;
        }
        component_of(self, 0).len() == self.node_count()
    }
}

fn component_of(g: &Graph, seed: usize) -> Vec<usize> {
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![seed];
    let mut members = Vec::new();
    seen[seed] = true;
    while let Some(i) = stack.pop() {
        members.push(i);
        for &(j, _) in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    members
}

/// Extract the largest connected component together with the mapping from new
/// node index to original index. Ties between equal-size components go to the
/// one containing the smallest original index.
pub fn largest_connected_component(g: &Graph) -> (Graph, Vec<usize>) {
    let n = g.node_count();
    if n == 0 {
        return (Graph::from_canonical(Vec::new(), Vec::new(), Vec::new()), Vec::new());
    }
    let mut assigned = vec![false; n];
    let mut best: Option<Vec<usize>> = None;
    for seed in 0..n {
        if assigned[seed] {
            continue;
        }
        let members = component_of(g, seed);
        for &i in &members {
            assigned[i] = true;
        }
        // Seeds are visited in ascending index order, so on equal size the
        // earlier component (smallest contained index) is kept.
        if best.as_ref().map_or(true, |b| members.len() > b.len()) {
            best = Some(members);
        }
    }
    let mut mapping = best.unwrap();
    mapping.sort_unstable();
    let mut old_to_new = vec![usize::MAX; n];
    for (new, &old) in mapping.iter().enumerate() {
        old_to_new[old] = new;
    }
    let labels = mapping.iter().map(|&old| g.labels[old].clone()).collect();
    let internal = mapping.iter().map(|&old| g.internal[old]).collect();
    let edges = g
        .edges
        .iter()
        .filter(|e| old_to_new[e.a] != usize::MAX && old_to_new[e.b] != usize::MAX)
        .map(|e| Edge { a: old_to_new[e.a], b: old_to_new[e.b], weight: e.weight })
        .collect();
    (Graph::from_canonical(labels, edges, internal), mapping)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_plus_edge() -> Graph {
        // nodes 0,1,2 form a triangle; 3-4 is a disjoint edge
        Graph::from_edges(5, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0)]).unwrap()
    }

    #[test]
    fn degree_sum_matches_twice_edge_weight() {
        let g = triangle_plus_edge();
        let sum: f64 = g.degrees().iter().sum();
        assert_eq!(sum, 2.0 * g.total_edge_weight());
    }

    #[test]
    fn duplicate_edges_merge_by_sum() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0), (1, 0, 2.5)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].weight, 3.5);
        assert_eq!(g.degree(0), 3.5);
    }

    #[test]
    fn self_loop_rejected_in_direct_construction() {
        assert!(Graph::from_edges(2, &[(0, 0, 1.0)]).is_err());
    }

    #[test]
    fn lcc_of_connected_graph_is_identity() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let (lcc, map) = largest_connected_component(&g);
        assert_eq!(lcc.node_count(), 3);
        assert_eq!(map, vec![0, 1, 2]);
    }

    #[test]
    fn lcc_picks_larger_component() {
        let g = triangle_plus_edge();
        let (lcc, map) = largest_connected_component(&g);
        assert_eq!(lcc.node_count(), 3);
        assert_eq!(lcc.edge_count(), 3);
        assert_eq!(map, vec![0, 1, 2]);
    }

    #[test]
    fn lcc_tie_goes_to_smallest_index() {
        // two single edges, equal size components
        let g = Graph::from_edges(4, &[(2, 3, 1.0), (0, 1, 1.0)]).unwrap();
        let (_, map) = largest_connected_component(&g);
        assert_eq!(map, vec![0, 1]);
    }

    #[test]
    fn lcc_of_empty_graph_is_empty() {
        let g = Graph::from_edges(0, &[]).unwrap();
        let (lcc, map) = largest_connected_component(&g);
        assert_eq!(lcc.node_count(), 0);
        assert!(map.is_empty());
    }
}
