//! Weighted modularity scoring and Louvain-style greedy maximization.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::{Error, Result};

/// Move-acceptance threshold: a sweep with no gain above this ends the level.
const GAIN_EPS: f64 = 1e-12;

/// Hard community assignment: labels lie in `[0, k)`.
///
/// Detection outputs are compacted (every group non-empty, numbered by first
/// occurrence). Partitions built with [`Partition::with_group_count`] keep
/// their external numbering, aligned with a parameter matrix or planted truth,
/// and may reserve empty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Compact arbitrary labels to `[0, k)`, numbering groups by first occurrence.
    pub fn from_labels(raw: impl IntoIterator<Item = usize>) -> Self {
        let mut remap: Vec<Option<usize>> = Vec::new();
        let mut labels = Vec::new();
        let mut k = 0;
        for label in raw {
            if label >= remap.len() {
                remap.resize(label + 1, None);
            }
            let compact = *remap[label].get_or_insert_with(|| {
                let id = k;
                k += 1;
                id
            });
            labels.push(compact);
        }
        Partition { labels, k }
    }

    /// Keep labels and group count exactly as given (no renumbering).
    pub fn with_group_count(labels: Vec<usize>, k: usize) -> crate::Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&c| c >= k) {
            return Err(crate::Error::invalid(format!("label {bad} out of range for k={k}")));
        }
        Ok(Partition { labels, k })
    }

    pub fn singletons(n: usize) -> Self {
        Partition { labels: (0..n).collect(), k: n }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn group_count(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member lists per group, each ascending.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (i, &c) in self.labels.iter().enumerate() {
            groups[c].push(i);
        }
        groups
    }
}

/// Total mass entering the modularity normalization: edge weight plus
/// node-internal weight (within-region interaction mass counts as within-group).
fn total_weight(g: &Graph) -> f64 {
    g.total_edge_weight() + g.total_internal_weight()
}

/// Node degree as modularity sees it: incident edge weight plus twice the
/// internal weight, so that degrees still sum to twice the total weight.
fn null_degree(g: &Graph, i: usize) -> f64 {
    g.degree(i) + 2.0 * g.internal(i)
}

/// Modularity `Q = sum_r [e_rr - resolution * a_r^2]` of a partition.
pub fn modularity(g: &Graph, p: &Partition, resolution: f64) -> Result<f64> {
    if p.len() != g.node_count() {
        return Err(Error::invalid(format!(
            "partition covers {} nodes, graph has {}",
            p.len(),
            g.node_count()
        )));
    }
    if resolution <= 0.0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let w_total = total_weight(g);
    if g.node_count() == 0 || w_total <= 0.0 {
        return Err(Error::UndefinedScore { reason: "graph has no weight".into() });
    }
    Ok(modularity_unchecked(g, p.labels(), resolution, w_total))
}

fn modularity_unchecked(g: &Graph, labels: &[usize], resolution: f64, w_total: f64) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut within = vec![0.0; k];
    let mut degree_sum = vec![0.0; k];
    for e in g.edges() {
        if labels[e.a] == labels[e.b] {
            within[labels[e.a]] += e.weight;
        }
    }
    for i in 0..g.node_count() {
        within[labels[i]] += g.internal(i);
        degree_sum[labels[i]] += null_degree(g, i);
    }
    let mut q = 0.0;
    for r in 0..k {
        let e_rr = within[r] / w_total;
        let a_r = degree_sum[r] / (2.0 * w_total);
        q += e_rr - resolution * a_r * a_r;
    }
    q
}

/// Louvain greedy modularity maximization.
///
/// Each level shuffles the node visitation order with the seeded generator,
/// moves single nodes while some move gains more than `1e-12`, then aggregates
/// communities into super-nodes and repeats. Ties in gain break toward the
/// lowest community index, so results are deterministic given the seed.
pub fn louvain(g: &Graph, resolution: f64, seed: u64) -> Result<Partition> {
    if g.node_count() == 0 {
        return Err(Error::EmptyInput("louvain needs a non-empty graph"));
    }
    if resolution <= 0.0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let w_total = total_weight(g);
    if w_total <= 0.0 {
        return Err(Error::UndefinedScore { reason: "graph has no weight".into() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // assignment[i]: community of original node i in the current level's graph
    let mut assignment: Vec<usize> = (0..g.node_count()).collect();
    let mut level = g.clone();

    loop {
        let before = modularity_unchecked(
            &level,
            &(0..level.node_count()).collect::<Vec<_>>(),
            resolution,
            w_total,
        );
        let (labels, moved) = local_move_phase(&level, resolution, w_total, &mut rng);
        if !moved {
            break;
        }
        let after = modularity_unchecked(&level, &labels, resolution, w_total);
        debug_assert!(
            after >= before - 1e-9,
            "level decreased modularity: {before} -> {after}"
        );
        for a in assignment.iter_mut() {
            *a = labels[*a];
        }
        level = aggregate(&level, &labels);
    }

    Ok(Partition::from_labels(assignment))
}

/// One level of single-node moves. Returns per-node community labels
/// (compacted) and whether any node changed community.
fn local_move_phase(
    g: &Graph,
    resolution: f64,
    w_total: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, bool) {
    let n = g.node_count();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut comm_degree: Vec<f64> = (0..n).map(|i| null_degree(g, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut moved_any = false;

    // scratch: weight from the current node to each community
    let mut to_comm: Vec<f64> = vec![0.0; n];
    let mut seen_comm: Vec<bool> = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();

    loop {
        let mut moved_this_sweep = false;
        order.shuffle(rng);
        for &i in &order {
            let k_i = null_degree(g, i);
            let current = comm[i];

            touched.clear();
            for &(j, w) in g.neighbors(i) {
                let c = comm[j];
                if !seen_comm[c] {
                    seen_comm[c] = true;
                    touched.push(c);
                }
                to_comm[c] += w;
            }
            if !seen_comm[current] {
                seen_comm[current] = true;
                touched.push(current);
            }

            comm_degree[current] -= k_i;
            let gain_of = |c: usize, to_c: f64, comm_degree: &[f64]| {
                to_c / w_total - resolution * k_i * comm_degree[c] / (2.0 * w_total * w_total)
            };
            let stay_gain = gain_of(current, to_comm[current], &comm_degree);

            // ascending candidate order + strict improvement = ties go to the
            // lowest community index
            touched.sort_unstable();
            let mut best = current;
            let mut best_gain = stay_gain + GAIN_EPS;
            for &c in &touched {
                if c == current {
                    continue;
                }
                let gain = gain_of(c, to_comm[c], &comm_degree);
                if gain > best_gain {
                    best = c;
                    best_gain = gain;
                }
            }

            comm_degree[best] += k_i;
            if best != current {
                comm[i] = best;
                moved_this_sweep = true;
                moved_any = true;
            }

            for &c in &touched {
                to_comm[c] = 0.0;
                seen_comm[c] = false;
            }
        }
        if !moved_this_sweep {
            break;
        }
    }

    let compact = Partition::from_labels(comm.iter().copied());
    (compact.labels().to_vec(), moved_any)
}

/// Collapse each community into one super-node; within-community weight
/// (including member internal weight) becomes the super-node's internal weight.
fn aggregate(g: &Graph, labels: &[usize]) -> Graph {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; k];
    let mut cross: std::collections::HashMap<(usize, usize), f64> = std::collections::HashMap::new();
    for e in g.edges() {
        let (ca, cb) = (labels[e.a], labels[e.b]);
        if ca == cb {
            internal[ca] += e.weight;
        } else {
            *cross.entry((ca.min(cb), ca.max(cb))).or_insert(0.0) += e.weight;
        }
    }
    for i in 0..g.node_count() {
        internal[labels[i]] += g.internal(i);
    }
    let edges: Vec<(usize, usize, f64)> = cross.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    let names = (0..k).map(|c| format!("c{c}")).collect();
    Graph::from_edges_labeled(names, &edges, internal).expect("aggregate edges valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_triangles() -> Graph {
        Graph::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
            ],
        )
        .unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn all_in_one_partition_scores_zero() {
        let g = two_triangles();
        let p = Partition::from_labels(vec![0; 6]);
        assert_abs_diff_eq!(modularity(&g, &p, 1.0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn two_triangles_split_scores_half() {
        let g = two_triangles();
        let p = Partition::from_labels(vec![0, 0, 0, 1, 1, 1]);
        assert_abs_diff_eq!(modularity(&g, &p, 1.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn split_single_edge_scores_minus_half() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let p = Partition::from_labels(vec![0, 1]);
        assert_abs_diff_eq!(modularity(&g, &p, 1.0).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn empty_graph_is_undefined() {
        let g = Graph::from_edges(0, &[]).unwrap();
        let p = Partition::from_labels(Vec::<usize>::new());
        assert!(matches!(
            modularity(&g, &p, 1.0),
            Err(Error::UndefinedScore { .. })
        ));
    }

    #[test]
    fn zero_weight_graph_is_undefined() {
        let g = Graph::from_edges(3, &[]).unwrap();
        let p = Partition::from_labels(vec![0, 1, 2]);
        assert!(matches!(
            modularity(&g, &p, 1.0),
            Err(Error::UndefinedScore { .. })
        ));
    }

    #[test]
    fn internal_weight_counts_within_and_in_degree() {
        // two nodes, internal weight 10 each, cross edge 2: W = 22
        let g = Graph::from_edges_labeled(
            vec!["a".into(), "b".into()],
            &[(0, 1, 2.0)],
            vec![10.0, 10.0],
        )
        .unwrap();
        let split = Partition::from_labels(vec![0, 1]);
        // e_rr = 10/22 each, a_r = 22/44 = 1/2 each
        let expected = 2.0 * (10.0 / 22.0 - 0.25);
        assert_abs_diff_eq!(modularity(&g, &split, 1.0).unwrap(), expected, epsilon = 1e-15);
        let merged = Partition::from_labels(vec![0, 0]);
        assert_abs_diff_eq!(modularity(&g, &merged, 1.0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn louvain_keeps_complete_graph_whole() {
        let g = complete(5);
        let p = louvain(&g, 1.0, 7).unwrap();
        assert_eq!(p.group_count(), 1);
    }

    #[test]
    fn louvain_separates_two_triangles() {
        let g = two_triangles();
        let p = louvain(&g, 1.0, 3).unwrap();
        assert_eq!(p.group_count(), 2);
        assert_eq!(p.label(0), p.label(1));
        assert_eq!(p.label(1), p.label(2));
        assert_eq!(p.label(3), p.label(4));
        assert_eq!(p.label(4), p.label(5));
        assert_ne!(p.label(0), p.label(3));
        assert_abs_diff_eq!(modularity(&g, &p, 1.0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn louvain_finds_ring_of_four_triangles() {
        // triangles (3t, 3t+1, 3t+2), ring closed by edges between triangle t
        // and t+1 through nodes 3t+2 and 3(t+1)
        let mut edges = Vec::new();
        for t in 0..4usize {
            let base = 3 * t;
            edges.push((base, base + 1, 1.0));
            edges.push((base + 1, base + 2, 1.0));
            edges.push((base, base + 2, 1.0));
            edges.push((base + 2, (base + 3) % 12, 1.0));
        }
        let g = Graph::from_edges(12, &edges).unwrap();
        let p = louvain(&g, 1.0, 11).unwrap();
        assert_eq!(p.group_count(), 4);
        for t in 0..4 {
            assert_eq!(p.label(3 * t), p.label(3 * t + 1));
            assert_eq!(p.label(3 * t), p.label(3 * t + 2));
        }
        assert_abs_diff_eq!(modularity(&g, &p, 1.0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn louvain_is_deterministic_for_a_seed() {
        let g = two_triangles();
        let a = louvain(&g, 1.0, 42).unwrap();
        let b = louvain(&g, 1.0, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_graph_rejected() {
        let g = Graph::from_edges(0, &[]).unwrap();
        assert!(louvain(&g, 1.0, 0).is_err());
    }
}
