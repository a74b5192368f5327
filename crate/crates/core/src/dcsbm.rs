//! The degree-corrected block model: parameter container, forward generator,
//! and exact log-likelihood of a labeled simple graph.
//!
//! Under the model, each node i carries a target degree `d_i` and a group
//! `c_i` drawn from the prior `gamma`; the number of edges between i and j is
//! Poisson with mean `d_i * d_j * omega[c_i][c_j]`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::modularity::Partition;
use crate::{Error, Result};

/// Tolerance on the prior normalization `sum_r gamma_r = 1`.
pub const GAMMA_SUM_TOL: f64 = 1e-12;

/// Group prior `gamma` and symmetric affinity matrix `omega` for `k` groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct BlockModelParams {
    k: usize,
    gamma: Vec<f64>,
    omega: Vec<f64>, // k*k row-major, exactly symmetric
}

/// JSON shape: `{"k": 2, "gamma": [...], "omega": [[...], [...]]}`.
#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    k: usize,
    gamma: Vec<f64>,
    omega: Vec<Vec<f64>>,
}

impl TryFrom<ParamsRepr> for BlockModelParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        if r.gamma.len() != r.k || r.omega.len() != r.k || r.omega.iter().any(|row| row.len() != r.k) {
            return Err(Error::invalid("params dimensions do not match k"));
        }
        let flat: Vec<f64> = r.omega.into_iter().flatten().collect();
        BlockModelParams::new(r.gamma, flat)
    }
}

impl From<BlockModelParams> for ParamsRepr {
    fn from(p: BlockModelParams) -> Self {
        let omega = (0..p.k)
            .map(|r| p.omega[r * p.k..(r + 1) * p.k].to_vec())
            .collect();
        ParamsRepr { k: p.k, gamma: p.gamma, omega }
    }
}

impl BlockModelParams {
    /// Validate and store parameters; `omega` is `k*k` row-major and is
    /// symmetrized exactly after an approximate symmetry check.
    pub fn new(gamma: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        let k = gamma.len();
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if omega.len() != k * k {
            return Err(Error::invalid("omega must be k*k"));
        }
        if gamma.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(Error::invalid("gamma entries must be non-negative"));
        }
        let sum: f64 = gamma.iter().sum();
        if (sum - 1.0).abs() > GAMMA_SUM_TOL {
            return Err(Error::invalid(format!("gamma sums to {sum}, expected 1")));
        }
        if omega.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("omega entries must be non-negative"));
        }
        let mut sym = omega;
        for r in 0..k {
            for s in (r + 1)..k {
                let a = sym[r * k + s];
                let b = sym[s * k + r];
                if (a - b).abs() > 1e-8 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::invalid(format!("omega not symmetric at ({r},{s})")));
                }
                let m = 0.5 * (a + b);
                sym[r * k + s] = m;
                sym[s * k + r] = m;
            }
        }
        Ok(BlockModelParams { k, gamma, omega: sym })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn omega(&self, r: usize, s: usize) -> f64 {
        self.omega[r * self.k + s]
    }

    pub fn omega_row(&self, r: usize) -> &[f64] {
        &self.omega[r * self.k..(r + 1) * self.k]
    }

    pub fn omega_flat(&self) -> &[f64] {
        &self.omega
    }
}

/// Whether repeated edges between a pair are kept (as weights) or truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenerateMode {
    /// Truncate multiplicities to 0/1; the output is a simple graph.
    #[default]
    Simple,
    /// Keep multiplicities as integer edge weights.
    Multigraph,
}

/// Pair means above this default are treated as outside the sparse regime.
pub const DEFAULT_MEAN_CAP: f64 = 50.0;

/// Draw a graph and its planted assignment from the model. Deterministic
/// given the seed: group draws first, then pairs in `(i, j)` order with `i < j`.
pub fn generate(
    n: usize,
    params: &BlockModelParams,
    target_degrees: &[f64],
    seed: u64,
    mode: GenerateMode,
) -> Result<(Graph, Partition)> {
    generate_with_cap(n, params, target_degrees, seed, mode, DEFAULT_MEAN_CAP)
}

/// As [`generate`] with an explicit cap on the largest allowed pair mean.
pub fn generate_with_cap(
    n: usize,
    params: &BlockModelParams,
    target_degrees: &[f64],
    seed: u64,
    mode: GenerateMode,
    mean_cap: f64,
) -> Result<(Graph, Partition)> {
    if target_degrees.len() != n {
        return Err(Error::invalid("target_degrees length must equal n"));
    }
    if target_degrees.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::invalid("target degrees must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = sample_assignment(n, params, &mut rng)?;

    // The largest pair mean involves the two largest degrees within each
    // group pair, so the cap can be verified before any edge is drawn.
    let k = params.k();
    let mut top_two = vec![[0.0f64; 2]; k];
    for i in 0..n {
        let t = &mut top_two[assignment[i]];
        if target_degrees[i] > t[0] {
            t[1] = t[0];
            t[0] = target_degrees[i];
        } else if target_degrees[i] > t[1] {
            t[1] = target_degrees[i];
        }
    }
    for r in 0..k {
        for s in r..k {
            let max_mean = if r == s {
                top_two[r][0] * top_two[r][1] * params.omega(r, r)
            } else {
                top_two[r][0] * top_two[s][0] * params.omega(r, s)
            };
            if max_mean > mean_cap {
                return Err(Error::DenseRegime { mean: max_mean, cap: mean_cap });
            }
        }
    }

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mean = target_degrees[i] * target_degrees[j] * params.omega(assignment[i], assignment[j]);
            if mean == 0.0 {
                continue;
            }
            let draw = Poisson::new(mean)
                .map_err(|_| Error::invalid(format!("invalid poisson mean {mean}")))?
                .sample(&mut rng);
            let multiplicity = draw as u64;
            if multiplicity == 0 {
                continue;
            }
            let weight = match mode {
                GenerateMode::Simple => 1.0,
                GenerateMode::Multigraph => multiplicity as f64,
            };
            edges.push((i, j, weight));
        }
    }
    let graph = Graph::from_edges(n, &edges)?;
    Ok((graph, Partition::with_group_count(assignment, k)?))
}

/// Sample group labels from the prior alone.
pub fn sample_assignment(n: usize, params: &BlockModelParams, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(params.gamma())
        .map_err(|_| Error::invalid("gamma has no positive mass"))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// Log-likelihood value plus a count of edges that fell on zero affinities
/// (any such edge makes the value negative infinity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub zero_affinity_edges: usize,
}

/// Exact log-likelihood of a simple labeled graph under the model, summed
/// over ordered node pairs including the diagonal: each edge contributes
/// `2 log omega`, and the penalty term is `sum_rs D_r D_s omega_rs` with
/// `D_r` the degree mass of group r. Additive constants are dropped, so
/// values compare only within this implementation.
pub fn log_likelihood(g: &Graph, c: &Partition, params: &BlockModelParams) -> Result<LogLikelihood> {
    let n = g.node_count();
    if c.len() != n {
        return Err(Error::invalid("partition does not cover the graph"));
    }
    if !g.is_simple() {
        return Err(Error::invalid("log-likelihood requires a simple graph"));
    }
    let k = params.k();
    if c.labels().iter().any(|&r| r >= k) {
        return Err(Error::invalid("partition label out of range for params"));
    }

    let mut edge_term = 0.0;
    let mut zero_affinity_edges = 0usize;
    for e in g.edges() {
        let w = params.omega(c.label(e.a), c.label(e.b));
        if w == 0.0 {
            zero_affinity_edges += 1;
        } else {
            edge_term += 2.0 * w.ln();
        }
    }

    let mut mass = vec![0.0; k];
    for i in 0..n {
        mass[c.label(i)] += g.degree(i);
    }
    let mut penalty = 0.0;
    for r in 0..k {
        for s in 0..k {
            penalty += mass[r] * mass[s] * params.omega(r, s);
        }
    }

    let value = if zero_affinity_edges > 0 { f64::NEG_INFINITY } else { edge_term - penalty };
    Ok(LogLikelihood { value, zero_affinity_edges })
}

/// Degrees drawn from a discrete power law `P(d) proportional to d^-exponent`
/// on `d_min..=d_max`.
pub fn sample_power_law_degrees(
    n: usize,
    exponent: f64,
    d_min: usize,
    d_max: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if d_min == 0 || d_max < d_min {
        return Err(Error::invalid("degree range must satisfy 1 <= d_min <= d_max"));
    }
    let weights: Vec<f64> = (d_min..=d_max).map(|d| (d as f64).powf(-exponent)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|_| Error::invalid("bad degree weights"))?;
    Ok((0..n).map(|_| (d_min + dist.sample(rng)) as f64).collect())
}

/// The suite default: exponent 2.5, minimum 2, maximum `sqrt(n)`.
pub fn default_power_law_degrees(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_max = ((n as f64).sqrt().floor() as usize).max(2);
    sample_power_law_degrees(n, 2.5, 2, d_max, &mut rng).expect("valid default range")
}

/// Planted-partition affinities with `omega_in / omega_out = ratio`, scaled so
/// the expected degree of every node is (approximately) its target degree when
/// groups carry equal degree mass: `sum_s D_s omega_rs = 1`.
pub fn assortative_affinities(k: usize, ratio: f64, total_degree: f64) -> Result<BlockModelParams> {
    if k == 0 || ratio <= 0.0 || total_degree <= 0.0 {
        return Err(Error::invalid("need k >= 1, ratio > 0, total_degree > 0"));
    }
    let x = k as f64 / (total_degree * (ratio + k as f64 - 1.0));
    let mut omega = vec![x; k * k];
    for r in 0..k {
        omega[r * k + r] = ratio * x;
    }
    BlockModelParams::new(vec![1.0 / k as f64; k], omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform_params(k: usize, w: f64) -> BlockModelParams {
        BlockModelParams::new(vec![1.0 / k as f64; k], vec![w; k * k]).unwrap()
    }

    #[test]
    fn gamma_must_normalize() {
        assert!(BlockModelParams::new(vec![0.5, 0.6], vec![1.0; 4]).is_err());
        assert!(BlockModelParams::new(vec![0.5, 0.5], vec![1.0; 4]).is_ok());
    }

    #[test]
    fn omega_must_be_symmetric_nonnegative() {
        assert!(BlockModelParams::new(vec![0.5, 0.5], vec![1.0, 0.2, 0.7, 1.0]).is_err());
        assert!(BlockModelParams::new(vec![0.5, 0.5], vec![1.0, -0.1, -0.1, 1.0]).is_err());
    }

    #[test]
    fn params_json_round_trip() {
        let p = BlockModelParams::new(vec![0.25, 0.75], vec![0.5, 0.1, 0.1, 0.9]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"omega\":[["));
        let back: BlockModelParams = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn zero_affinity_generates_empty_graph() {
        let p = uniform_params(2, 0.0);
        let degrees = vec![3.0; 20];
        let (g, planted) = generate(20, &p, &degrees, 1, GenerateMode::Simple).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(planted.len(), 20);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = uniform_params(2, 0.02);
        let degrees = vec![4.0; 30];
        let (g1, c1) = generate(30, &p, &degrees, 9, GenerateMode::Multigraph).unwrap();
        let (g2, c2) = generate(30, &p, &degrees, 9, GenerateMode::Multigraph).unwrap();
        assert_eq!(c1.labels(), c2.labels());
        assert_eq!(g1.edges().len(), g2.edges().len());
        for (e1, e2) in g1.edges().iter().zip(g2.edges()) {
            assert_eq!((e1.a, e1.b, e1.weight), (e2.a, e2.b, e2.weight));
        }
    }

    #[test]
    fn dense_regime_is_rejected() {
        let p = uniform_params(1, 1.0);
        let degrees = vec![10.0; 10];
        match generate(10, &p, &degrees, 0, GenerateMode::Simple) {
            Err(Error::DenseRegime { mean, cap }) => {
                assert_eq!(mean, 100.0);
                assert_eq!(cap, DEFAULT_MEAN_CAP);
            }
            other => panic!("expected dense-regime error, got {other:?}"),
        }
    }

    #[test]
    fn multigraph_edge_count_matches_poisson_mean() {
        // k=1, n=100, d_i=5, omega = 1/(sum d): expected total multiplicity
        // sum_{i<j} d_i d_j omega = C(100,2)*25/500 = 247.5
        let n = 100;
        let degrees = vec![5.0; n];
        let total_degree: f64 = degrees.iter().sum();
        let p = uniform_params(1, 1.0 / total_degree);
        let expected = (n * (n - 1) / 2) as f64 * 25.0 / total_degree;

        let runs = 1000;
        let mut total = 0.0;
        for seed in 0..runs {
            let (g, _) = generate(n, &p, &degrees, seed, GenerateMode::Multigraph).unwrap();
            total += g.total_edge_weight();
        }
        let sample_mean = total / runs as f64;
        // total is Poisson(expected), so the mean over `runs` draws has
        // standard error sqrt(expected / runs)
        let se = (expected / runs as f64).sqrt();
        assert!(
            (sample_mean - expected).abs() <= 3.0 * se,
            "sample mean {sample_mean} vs expected {expected} (se {se})"
        );
    }

    #[test]
    fn group_fractions_follow_gamma() {
        let p = BlockModelParams::new(vec![0.2, 0.8], vec![0.0; 4]).unwrap();
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let labels = sample_assignment(n, &p, &mut rng).unwrap();
        let count0 = labels.iter().filter(|&&c| c == 0).count() as f64;
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        assert!((count0 - 0.2 * n as f64).abs() <= 3.0 * sigma);
    }

    #[test]
    fn single_edge_log_likelihood_matches_hand_value() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let c = Partition::from_labels(vec![0, 0]);
        for w in [0.1, 0.5, 2.0] {
            let p = uniform_params(1, w);
            let ll = log_likelihood(&g, &c, &p).unwrap();
            assert_abs_diff_eq!(ll.value, 2.0 * w.ln() - 4.0 * w, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_likelihood_invariant_under_joint_permutation() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]).unwrap();
        let p = BlockModelParams::new(vec![0.5, 0.5], vec![0.4, 0.1, 0.1, 0.3]).unwrap();
        let c = Partition::from_labels(vec![0, 0, 1, 1]);
        // swap group names and permute omega accordingly
        let p_swapped = BlockModelParams::new(vec![0.5, 0.5], vec![0.3, 0.1, 0.1, 0.4]).unwrap();
        let c_swapped = Partition::from_labels(vec![0, 0, 1, 1].iter().map(|&r| 1 - r).collect::<Vec<_>>());
        let a = log_likelihood(&g, &c, &p).unwrap();
        let b = log_likelihood(&g, &c_swapped, &p_swapped).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
    }

    #[test]
    fn zero_affinity_edge_flags_negative_infinity() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let c = Partition::from_labels(vec![0, 1]);
        let p = BlockModelParams::new(vec![0.5, 0.5], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let ll = log_likelihood(&g, &c, &p).unwrap();
        assert!(ll.value.is_infinite() && ll.value < 0.0);
        assert_eq!(ll.zero_affinity_edges, 1);
    }

    #[test]
    fn power_law_degrees_respect_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = sample_power_law_degrees(500, 2.5, 2, 22, &mut rng).unwrap();
        assert!(d.iter().all(|&x| (2.0..=22.0).contains(&x)));
        // exponent 2.5 concentrates mass at the minimum degree
        let at_min = d.iter().filter(|&&x| x == 2.0).count();
        assert!(at_min > 200, "expected heavy mass at d_min, got {at_min}");
    }

    #[test]
    fn assortative_affinities_fix_expected_degree_scale() {
        let k = 4;
        let total_degree = 1000.0;
        let p = assortative_affinities(k, 10.0, total_degree).unwrap();
        // sum_s (D/k) omega_rs should be 1 for every row r
        for r in 0..k {
            let row_sum: f64 = p.omega_row(r).iter().sum();
            assert_abs_diff_eq!(row_sum * total_degree / k as f64, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.omega(0, 0) / p.omega(0, 1), 10.0, epsilon = 1e-12);
    }
}
