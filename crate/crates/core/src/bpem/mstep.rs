//! Closed-form parameter updates from one- and two-node marginals.

use super::beliefs::{EdgeMarginals, Marginals};
use crate::dcsbm::BlockModelParams;
use crate::graph::Graph;
use crate::{Error, Result};

/// A group whose responsibility mass drops below this fraction of n has
/// collapsed and needs reseeding.
pub const COLLAPSE_FRACTION: f64 = 1e-8;

/// M-step output: new parameters plus any collapsed group indices. Collapsed
/// groups get zeroed affinity rows; the caller decides whether to reseed.
#[derive(Debug, Clone)]
pub struct MStep {
    pub params: BlockModelParams,
    pub collapsed: Vec<usize>,
}

/// Maximizing parameter update:
/// `gamma_r = (1/n) sum_i q^i_r` and
/// `omega_rs = sum_ij a_ij q^ij_rs / (D_r D_s)` with `D_r = sum_i d_i q^i_r`,
/// the numerator summed over ordered pairs (each edge contributes its block
/// plus the transpose). The output is exactly symmetric.
pub fn m_step(g: &Graph, q1: &Marginals, q2: &EdgeMarginals) -> Result<MStep> {
    let n = g.node_count();
    let k = q1.k();
    if q2.k() != k {
        return Err(Error::invalid("q1 and q2 group counts differ"));
    }
    if q1.node_count() != n || q2.edge_count() != g.edge_count() {
        return Err(Error::invalid("marginals do not match the graph"));
    }
    if n == 0 {
        return Err(Error::EmptyInput("m-step needs a non-empty graph"));
    }

    let mut gamma = vec![0.0; k];
    let mut degree_mass = vec![0.0; k];
    for i in 0..n {
        let d = g.degree(i);
        for (r, &q) in q1.row(i).iter().enumerate() {
            gamma[r] += q;
            degree_mass[r] += d * q;
        }
    }
    // renormalize exactly so the prior invariant survives accumulated rounding
    let gamma_sum: f64 = gamma.iter().sum();
    for gm in gamma.iter_mut() {
        *gm /= gamma_sum;
    }

    // ordered-pair edge mass: block + transpose per undirected edge
    let mut edge_mass = vec![0.0; k * k];
    for e in 0..g.edge_count() {
        let block = q2.block(e);
        for r in 0..k {
            for s in 0..k {
                edge_mass[r * k + s] += block[r * k + s] + block[s * k + r];
            }
        }
    }

    let collapsed: Vec<usize> = (0..k)
        .filter(|&r| gamma[r] < COLLAPSE_FRACTION || degree_mass[r] <= 0.0)
        .collect();

    let mut omega = vec![0.0; k * k];
    for r in 0..k {
        for s in 0..k {
            let denom = degree_mass[r] * degree_mass[s];
            omega[r * k + s] = if collapsed.contains(&r) || collapsed.contains(&s) || denom <= 0.0
            {
                0.0
            } else {
                edge_mass[r * k + s] / denom
            };
        }
    }
    // edge_mass is symmetric by construction and the denominator commutes, so
    // omega is already symmetric to the last bit
    let params = BlockModelParams::new(gamma, omega)?;
    Ok(MStep { params, collapsed })
}

/// Expected complete-data log-likelihood used to rank restarts:
/// edge blocks weight `log omega`, the penalty uses the mean-field pair
/// factorization over all ordered pairs, and the prior term is
/// `sum_i sum_r q^i_r log gamma_r`. Zero mass on zero parameters contributes
/// zero.
pub fn objective_proxy(
    g: &Graph,
    q1: &Marginals,
    q2: &EdgeMarginals,
    params: &BlockModelParams,
) -> f64 {
    let k = params.k();
    let n = g.node_count();

    let mut edge_term = 0.0;
    for e in 0..g.edge_count() {
        let block = q2.block(e);
        for r in 0..k {
            for s in 0..k {
                let mass = block[r * k + s];
                if mass > 0.0 {
                    let w = params.omega(r, s);
                    if w > 0.0 {
                        edge_term += 2.0 * mass * w.ln();
                    } else {
                        return f64::NEG_INFINITY;
                    }
                }
            }
        }
    }

    let mut degree_mass = vec![0.0; k];
    let mut prior_term = 0.0;
    for i in 0..n {
        let d = g.degree(i);
        for (r, &q) in q1.row(i).iter().enumerate() {
            degree_mass[r] += d * q;
            if q > 0.0 {
                let gm = params.gamma()[r];
                if gm > 0.0 {
                    prior_term += q * gm.ln();
                } else {
                    return f64::NEG_INFINITY;
                }
            }
        }
    }

    let mut penalty = 0.0;
    for r in 0..k {
        for s in 0..k {
            penalty += degree_mass[r] * params.omega(r, s) * degree_mass[s];
        }
    }

    edge_term - penalty + prior_term
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn concentrated_marginals(labels: &[usize], k: usize) -> Marginals {
        let mut q1 = vec![0.0; labels.len() * k];
        for (i, &c) in labels.iter().enumerate() {
            q1[i * k + c] = 1.0;
        }
        Marginals::from_raw(k, q1)
    }

    fn concentrated_edge_marginals(g: &Graph, labels: &[usize], k: usize) -> EdgeMarginals {
        let mut blocks = vec![0.0; g.edge_count() * k * k];
        for (e, edge) in g.edges().iter().enumerate() {
            blocks[e * k * k + labels[edge.a] * k + labels[edge.b]] = 1.0;
        }
        EdgeMarginals::from_raw(k, blocks)
    }

    #[test]
    fn single_group_recovers_inverse_total_degree() {
        // k=1: omega = 2m / (2m)^2 = 1 / (2m)
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let labels = vec![0usize; 4];
        let q1 = concentrated_marginals(&labels, 1);
        let q2 = concentrated_edge_marginals(&g, &labels, 1);
        let step = m_step(&g, &q1, &q2).unwrap();
        assert_eq!(step.params.gamma(), &[1.0]);
        assert_abs_diff_eq!(step.params.omega(0, 0), 1.0 / 6.0, epsilon = 1e-15);
        assert!(step.collapsed.is_empty());
    }

    #[test]
    fn two_block_cross_affinity_matches_hand_count() {
        // blocks {0,1,2} and {3,4,5}; 2 within-0 edges, 2 within-1 edges,
        // 1 cross edge (2-3)
        let g = Graph::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        let labels = vec![0, 0, 0, 1, 1, 1];
        let q1 = concentrated_marginals(&labels, 2);
        let q2 = concentrated_edge_marginals(&g, &labels, 2);
        let step = m_step(&g, &q1, &q2).unwrap();
        // degree sums per block: D0 = 1+2+2 = 5, D1 = 2+2+1 = 5
        // cross edges contribute 2*1 in the ordered sum
        assert_abs_diff_eq!(step.params.omega(0, 1), 2.0 / 25.0, epsilon = 1e-15);
        assert_abs_diff_eq!(step.params.omega(0, 0), 4.0 / 25.0, epsilon = 1e-15);
        assert_abs_diff_eq!(step.params.gamma()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gamma_always_normalized() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let q1 = Marginals::from_raw(
            2,
            vec![0.7, 0.3, 0.2, 0.8, 0.5, 0.5],
        );
        let mut blocks = vec![0.0; 2 * 4];
        for b in blocks.chunks_mut(4) {
            b.copy_from_slice(&[0.25, 0.25, 0.25, 0.25]);
        }
        let q2 = EdgeMarginals::from_raw(2, blocks);
        let step = m_step(&g, &q1, &q2).unwrap();
        let sum: f64 = step.params.gamma().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_group_reports_collapse() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let labels = vec![0, 0, 0];
        let q1 = concentrated_marginals(&labels, 2);
        let q2 = concentrated_edge_marginals(&g, &labels, 2);
        let step = m_step(&g, &q1, &q2).unwrap();
        assert_eq!(step.collapsed, vec![1]);
        assert_eq!(step.params.omega(1, 1), 0.0);
        assert_eq!(step.params.omega(0, 1), 0.0);
    }
}
