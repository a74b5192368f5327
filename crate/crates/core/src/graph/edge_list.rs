//! Tab-separated edge-list ingestion and canonical serialization.
//!
//! Format: `src<TAB>dst[<TAB>weight]`, UTF-8, `#`-prefixed comment lines and
//! blank lines ignored. Node identifiers are arbitrary tokens mapped to dense
//! 0-based indices in first-seen order.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{Edge, Graph};
use crate::{Error, Result};

/// Handling of repeated `(i,j)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dedup {
    /// Merge duplicates by summing weights.
    #[default]
    Sum,
    /// Treat a duplicate as a data error.
    Error,
}

/// Handling of `src == dst` lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfLoopPolicy {
    /// Drop the line and count it (the default ingestion policy).
    #[default]
    Drop,
    /// Fold the weight into the node's internal weight. Used when reloading
    /// serialized aggregated graphs, where self lines carry within-region mass.
    Internal,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Accept a third weight column. When false, lines must have exactly two fields.
    pub weighted: bool,
    pub dedup: Dedup,
    pub self_loops: SelfLoopPolicy,
}

/// A loaded graph plus ingestion counters.
#[derive(Debug)]
pub struct LoadReport {
    pub graph: Graph,
    pub self_loops_dropped: usize,
}

/// Parse an edge list from a byte stream.
pub fn load_edge_list<R: BufRead>(reader: R, options: LoadOptions) -> Result<LoadReport> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut internal: Vec<f64> = Vec::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut self_loops_dropped = 0usize;

    let mut intern = |token: &str, labels: &mut Vec<String>, internal: &mut Vec<f64>,
                      index: &mut HashMap<String, usize>| {
        if let Some(&i) = index.get(token) {
            i
        } else {
            let i = labels.len();
            index.insert(token.to_string(), i);
            labels.push(token.to_string());
            internal.push(0.0);
            i
        }
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (src, dst, weight) = match (fields.len(), options.weighted) {
            (2, _) => (fields[0], fields[1], 1.0),
            (3, true) => {
                let w: f64 = fields[2].parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("non-numeric weight {:?}", fields[2]),
                })?;
                if !w.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("non-finite weight {w}"),
                    });
                }
                if w < 0.0 {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("negative weight {w}"),
                    });
                }
                (fields[0], fields[1], w)
            }
            (k, _) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {} fields, found {k}", if options.weighted { "2 or 3" } else { "2" }),
                })
            }
        };
        if src.is_empty() || dst.is_empty() {
            return Err(Error::Parse { line: lineno, message: "empty node identifier".into() });
        }
        let i = intern(src, &mut labels, &mut internal, &mut index);
        let j = intern(dst, &mut labels, &mut internal, &mut index);
        if i == j {
            match options.self_loops {
                SelfLoopPolicy::Drop => self_loops_dropped += 1,
                SelfLoopPolicy::Internal => internal[i] += weight,
            }
            continue;
        }
        let key = (i.min(j), i.max(j));
        if let Some(&first_line) = seen.get(&key) {
            match options.dedup {
                Dedup::Sum => {}
                Dedup::Error => {
                    return Err(Error::DuplicateEdge {
                        line: lineno,
                        a: labels[key.0].clone(),
                        b: labels[key.1].clone(),
                    })
                }
            }
            let _ = first_line;
        } else {
            seen.insert(key, lineno);
        }
        edges.push((i, j, weight));
    }

    let graph = Graph::from_edges_labeled(labels, &edges, internal)?;
    Ok(LoadReport { graph, self_loops_dropped })
}

/// Serialize in canonical order: edges ascending by `(a, b)` with `a < b`,
/// internal weights as trailing `label<TAB>label<TAB>weight` self lines.
/// Reloading with `weighted = true` and `SelfLoopPolicy::Internal` reproduces
/// the graph exactly.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    for Edge { a, b, weight } in g.edges() {
        writeln!(out, "{}\t{}\t{}", g.label(*a), g.label(*b), weight)?;
    }
    for i in 0..g.node_count() {
        if g.internal(i) > 0.0 {
            writeln!(out, "{}\t{}\t{}", g.label(i), g.label(i), g.internal(i))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, options: LoadOptions) -> Result<LoadReport> {
        load_edge_list(text.as_bytes(), options)
    }

    #[test]
    fn empty_stream_gives_empty_graph() {
        let r = load("", LoadOptions::default()).unwrap();
        assert_eq!(r.graph.node_count(), 0);
        assert_eq!(r.graph.edge_count(), 0);
    }

    #[test]
    fn two_edges_give_expected_degrees() {
        let r = load("a\tb\nb\tc", LoadOptions::default()).unwrap();
        assert_eq!(r.graph.node_count(), 3);
        assert_eq!(r.graph.edge_count(), 2);
        assert_eq!(r.graph.degrees(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn duplicate_merges_under_sum() {
        let r = load("a\tb\na\tb", LoadOptions::default()).unwrap();
        assert_eq!(r.graph.edge_count(), 1);
        assert_eq!(r.graph.edges()[0].weight, 2.0);
        assert_eq!(r.graph.degree(0), 2.0);
    }

    #[test]
    fn duplicate_errors_under_error_policy() {
        let err = load("a\tb\nb\ta", LoadOptions { dedup: Dedup::Error, ..Default::default() });
        match err {
            Err(Error::DuplicateEdge { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected duplicate-edge error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let err = load("a\tb\nc", LoadOptions::default());
        match err {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn weight_column_rejected_when_unweighted() {
        assert!(load("a\tb\t2.0", LoadOptions::default()).is_err());
    }

    #[test]
    fn bad_weights_rejected() {
        let weighted = LoadOptions { weighted: true, ..Default::default() };
        assert!(load("a\tb\tx", weighted).is_err());
        assert!(load("a\tb\t-1", weighted).is_err());
        assert!(load("a\tb\tinf", weighted).is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let r = load("# header\n\na\tb\n", LoadOptions::default()).unwrap();
        assert_eq!(r.graph.edge_count(), 1);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let r = load("a\ta\na\tb", LoadOptions::default()).unwrap();
        assert_eq!(r.self_loops_dropped, 1);
        assert_eq!(r.graph.edge_count(), 1);
        assert_eq!(r.graph.internal(0), 0.0);
    }

    #[test]
    fn self_loops_fold_to_internal_on_request() {
        let opts = LoadOptions {
            weighted: true,
            self_loops: SelfLoopPolicy::Internal,
            ..Default::default()
        };
        let r = load("a\ta\t3\na\tb\t1", opts).unwrap();
        assert_eq!(r.graph.internal(0), 3.0);
        assert_eq!(r.self_loops_dropped, 0);
    }

    #[test]
    fn serialization_round_trips() {
        let text = "b\ta\t2\na\tc\t1.5\nc\tc\t4\n";
        let opts = LoadOptions {
            weighted: true,
            self_loops: SelfLoopPolicy::Internal,
            ..Default::default()
        };
        let first = load(text, opts).unwrap().graph;
        let mut buf = Vec::new();
        write_edge_list(&first, &mut buf).unwrap();
        let second = load_edge_list(buf.as_slice(), opts).unwrap().graph;
        assert_eq!(first.node_count(), second.node_count());
        assert_eq!(first.edges().len(), second.edges().len());
        for (e1, e2) in first.edges().iter().zip(second.edges()) {
            assert_eq!((e1.a, e1.b, e1.weight), (e2.a, e2.b, e2.weight));
        }
        for i in 0..first.node_count() {
            assert_eq!(first.internal(i), second.internal(i));
        }
        let mut buf2 = Vec::new();
        write_edge_list(&second, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
