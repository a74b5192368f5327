//! Aggregation of pairwise interaction records into a weighted region graph.

use std::collections::HashMap;
use std::io::BufRead;

use super::Graph;
use crate::{Error, Result};

/// A log of pairwise interactions between opaque region codes.
///
/// Records are unordered pairs, normalized so the first code is
/// lexicographically no greater than the second.
#[derive(Debug, Clone, Default)]
pub struct RegionInteractionLog {
    records: Vec<(String, String)>,
}

impl RegionInteractionLog {
    pub fn new(records: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut normalized = Vec::new();
        for (a, b) in records {
            if a.is_empty() || b.is_empty() {
                return Err(Error::invalid("empty region code"));
            }
            if a <= b {
                normalized.push((a, b));
            } else {
                normalized.push((b, a));
            }
        }
        Ok(RegionInteractionLog { records: normalized })
    }

    /// Parse a two-column TSV of region codes. Comments and blank lines ignored.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    records.push((a.to_string(), b.to_string()));
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: "expected two tab-separated region codes".into(),
                    })
                }
            }
        }
        Self::new(records)
    }

    pub fn records(&self) -> &[(String, String)] {
        &self.records
    }
}

/// Count interactions per unordered region pair and build the region graph:
/// one node per distinct code (first-seen order), edge weight = record count,
/// same-region counts kept as node-internal weight rather than self-loops.
pub fn aggregate_by_region(log: &RegionInteractionLog) -> Graph {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
    let mut internal: Vec<f64> = Vec::new();

    for (a, b) in &log.records {
        for code in [a, b] {
            if !index.contains_key(code.as_str()) {
                index.insert(code, labels.len());
                labels.push(code.clone());
                internal.push(0.0);
            }
        }
        let i = index[a.as_str()];
        let j = index[b.as_str()];
        if i == j {
            internal[i] += 1.0;
        } else {
            *counts.entry((i.min(j), i.max(j))).or_insert(0.0) += 1.0;
        }
    }

    let edges: Vec<(usize, usize, f64)> =
        counts.into_iter().map(|((i, j), w)| (i, j, w)).collect();
    Graph::from_edges_labeled(labels, &edges, internal)
        .expect("aggregated edges are valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_of(pairs: &[(&str, &str)]) -> RegionInteractionLog {
        RegionInteractionLog::new(
            pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())),
        )
        .unwrap()
    }

    #[test]
    fn counts_unordered_pairs() {
        let g = aggregate_by_region(&log_of(&[("r1", "r2"), ("r2", "r1"), ("r1", "r3")]));
        assert_eq!(g.node_count(), 3);
        let mut weights: Vec<(String, String, f64)> = g
            .edges()
            .iter()
            .map(|e| (g.label(e.a).to_string(), g.label(e.b).to_string(), e.weight))
            .collect();
        weights.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(
            weights,
            vec![
                ("r1".into(), "r2".into(), 2.0),
                ("r1".into(), "r3".into(), 1.0)
            ]
        );
    }

    #[test]
    fn same_region_records_become_internal_weight() {
        let g = aggregate_by_region(&log_of(&[("r1", "r1"), ("r1", "r1"), ("r1", "r1")]));
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.internal(0), 3.0);
    }

    #[test]
    fn empty_log_gives_empty_graph() {
        let g = aggregate_by_region(&RegionInteractionLog::default());
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn record_order_does_not_change_weights() {
        let a = aggregate_by_region(&log_of(&[("x", "y"), ("y", "z"), ("x", "y")]));
        let b = aggregate_by_region(&log_of(&[("y", "z"), ("x", "y"), ("y", "x")]));
        let key = |g: &Graph| {
            let mut v: Vec<(String, String, f64)> = g
                .edges()
                .iter()
                .map(|e| (g.label(e.a).to_string(), g.label(e.b).to_string(), e.weight))
                .collect();
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            v
        };
        assert_eq!(key(&a), key(&b));
    }
}
