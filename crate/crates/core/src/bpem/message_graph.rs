//! Directed-edge indexing for message passing on a simple undirected graph.

use crate::graph::Graph;
use crate::{Error, Result};

/// CSR over directed edges: for each node the out-edges are contiguous, and
/// every directed edge knows the index of its reverse.
#[derive(Debug, Clone)]
pub struct MessageGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    sources: Vec<u32>,
    reverse: Vec<u32>,
    /// For each undirected edge `(a,b)` of the source graph, the directed
    /// indices of `a -> b` and `b -> a`, in the graph's edge order.
    edge_dirs: Vec<(u32, u32)>,
    degrees: Vec<f64>,
}

impl MessageGraph {
    pub fn new(g: &Graph) -> Result<Self> {
        if !g.is_simple() {
            return Err(Error::invalid("message passing requires a simple graph"));
        }
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for i in 0..n {
            offsets.push(offsets[i] + g.neighbors(i).len());
        }
        let total = offsets[n];
        let mut targets = vec![0u32; total];
        let mut sources = vec![0u32; total];
        for i in 0..n {
            for (slot, &(j, _)) in g.neighbors(i).iter().enumerate() {
                targets[offsets[i] + slot] = j as u32;
                sources[offsets[i] + slot] = i as u32;
            }
        }
        // adjacency lists are ascending, so the reverse edge is found by
        // binary search in the target's out-range
        let mut reverse = vec![0u32; total];
        for e in 0..total {
            let i = sources[e] as usize;
            let j = targets[e] as usize;
            let range = &targets[offsets[j]..offsets[j + 1]];
            let pos = range.binary_search(&(i as u32)).expect("undirected edge has both directions");
            reverse[e] = (offsets[j] + pos) as u32;
        }
        let mut edge_dirs = Vec::with_capacity(g.edge_count());
        for e in g.edges() {
            let range = &targets[offsets[e.a]..offsets[e.a + 1]];
            let pos = range.binary_search(&(e.b as u32)).expect("edge endpoint present");
            let ab = (offsets[e.a] + pos) as u32;
            edge_dirs.push((ab, reverse[ab as usize]));
        }
        Ok(MessageGraph {
            offsets,
            targets,
            sources,
            reverse,
            edge_dirs,
            degrees: g.degrees().to_vec(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn directed_count(&self) -> usize {
        self.targets.len()
    }

    pub fn undirected_count(&self) -> usize {
        self.edge_dirs.len()
    }

    /// Out-edge index range of node `i`.
    pub fn out_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn target(&self, e: usize) -> usize {
        self.targets[e] as usize
    }

    pub fn source(&self, e: usize) -> usize {
        self.sources[e] as usize
    }

    pub fn reverse(&self, e: usize) -> usize {
        self.reverse[e] as usize
    }

    pub fn edge_dirs(&self, undirected: usize) -> (usize, usize) {
        let (ab, ba) = self.edge_dirs[undirected];
        (ab as usize, ba as usize)
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.node_count())
            .map(|i| self.offsets[i + 1] - self.offsets[i])
            .max()
            .unwrap_or(0)
    }
}
