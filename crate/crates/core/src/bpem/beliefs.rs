//! Belief and marginal containers with their normalization invariants.

use rand::Rng;

use super::message_graph::MessageGraph;
use crate::{Error, Result};

/// Tolerance at which belief and marginal rows must sum to one.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// One value per directed edge and group: the probability that the source
/// node belongs to the group when the edge to the target is withheld.
#[derive(Debug, Clone, PartialEq)]
pub struct Beliefs {
    k: usize,
    mu: Vec<f64>, // directed_count * k, each row normalized
}

impl Beliefs {
    pub fn random(mg: &MessageGraph, k: usize, rng: &mut impl Rng) -> Self {
        let mut mu = vec![0.0; mg.directed_count() * k];
        for row in mu.chunks_mut(k) {
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = rng.gen::<f64>();
                sum += *v;
            }
            if sum == 0.0 {
                row.fill(1.0 / k as f64);
            } else {
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        Beliefs { k, mu }
    }

    pub fn uniform(mg: &MessageGraph, k: usize) -> Self {
        Beliefs { k, mu: vec![1.0 / k as f64; mg.directed_count() * k] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, e: usize) -> &[f64] {
        &self.mu[e * self.k..(e + 1) * self.k]
    }

    pub(crate) fn row_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.mu[e * self.k..(e + 1) * self.k]
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.mu
    }

    /// Check normalization of every directed row.
    pub fn validate(&self) -> Result<()> {
        for (e, row) in self.mu.chunks(self.k).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL || row.iter().any(|&v| v < 0.0) {
                return Err(Error::invalid(format!("belief row {e} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// One-node posteriors `q1`: an `n x k` row-normalized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    k: usize,
    q1: Vec<f64>,
}

impl Marginals {
    pub fn random(n: usize, k: usize, rng: &mut impl Rng) -> Self {
        let mut q1 = vec![0.0; n * k];
        for row in q1.chunks_mut(k) {
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = rng.gen::<f64>();
                sum += *v;
            }
            if sum == 0.0 {
                row.fill(1.0 / k as f64);
            } else {
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        Marginals { k, q1 }
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        Marginals { k, q1: vec![1.0 / k as f64; n * k] }
    }

    pub(crate) fn from_raw(k: usize, q1: Vec<f64>) -> Self {
        Marginals { k, q1 }
    }

    pub fn node_count(&self) -> usize {
        self.q1.len() / self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.q1[i * self.k..(i + 1) * self.k]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.q1[i * self.k..(i + 1) * self.k]
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.q1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q1
    }

    /// Hard assignment: argmax per row, ties to the lowest group.
    pub fn argmax_labels(&self) -> Vec<usize> {
        self.q1
            .chunks(self.k)
            .map(|row| {
                let mut best = 0;
                for (r, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = r;
                    }
                }
                best
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.q1.chunks(self.k).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL || row.iter().any(|&v| v < 0.0) {
                return Err(Error::invalid(format!("marginal row {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// Two-node posteriors `q2`: one `k x k` block per undirected edge, aligned
/// with the graph's edge order and oriented `(a, b)` with rows for `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMarginals {
    k: usize,
    blocks: Vec<f64>, // undirected_count * k * k
}

impl EdgeMarginals {
    pub(crate) fn from_raw(k: usize, blocks: Vec<f64>) -> Self {
        EdgeMarginals { k, blocks }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.blocks.len() / (self.k * self.k)
    }

    pub fn block(&self, e: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.blocks[e * kk..(e + 1) * kk]
    }

    pub fn validate(&self) -> Result<()> {
        let kk = self.k * self.k;
        for (e, block) in self.blocks.chunks(kk).enumerate() {
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL || block.iter().any(|&v| v < 0.0) {
                return Err(Error::invalid(format!("edge marginal {e} sums to {sum}")));
            }
        }
        Ok(())
    }
}
