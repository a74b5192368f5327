//! Belief-propagation sweeps for the degree-corrected block model.
//!
//! A sweep recomputes the external field once from the current one-node
//! marginals, then updates every directed message
//!
//! ```text
//! mu[i->j][r] ~ gamma_r * exp(-d_i * h_r) * prod_{k in N(i)\{j}} sum_s omega_rs * mu[k->i][s]
//! ```
//!
//! normalized over `r`, followed by the one-node marginals which use the same
//! form with the product over all neighbors. The neighbor product is
//! accumulated in log space so high-degree nodes cannot underflow; exact zero
//! factors are counted separately and re-excluded per message.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::beliefs::{Beliefs, EdgeMarginals, Marginals};
use super::message_graph::MessageGraph;
use crate::dcsbm::BlockModelParams;
use crate::graph::Graph;
use crate::{Error, Result};

/// Beliefs plus the matching one-node marginals, updated together.
#[derive(Debug, Clone, PartialEq)]
pub struct BpState {
    pub beliefs: Beliefs,
    pub q1: Marginals,
}

impl BpState {
    pub fn random(mg: &MessageGraph, k: usize, rng: &mut impl Rng) -> Self {
        BpState {
            beliefs: Beliefs::random(mg, k, rng),
            q1: Marginals::random(mg.node_count(), k, rng),
        }
    }
}

/// How a converged run ended.
#[derive(Debug, Clone)]
pub struct BpRun {
    pub state: BpState,
    pub sweeps: usize,
    pub converged: bool,
}

/// Initial state for [`BpEngine::run`].
pub enum BpInit {
    Random(u64),
    Warm(BpState),
}

/// Message-passing engine bound to one graph.
///
/// `threads = 1` runs deterministic in-place (Gauss-Seidel) sweeps, the
/// reference mode; `threads > 1` runs Jacobi sweeps parallelized over nodes
/// against the previous sweep's messages.
pub struct BpEngine {
    mg: MessageGraph,
    threads: usize,
    pool: Option<rayon::ThreadPool>,
}

struct Scratch {
    /// per out-slot and group: the incoming factor `sum_s omega_rs mu[rev][s]`
    factors: Vec<f64>,
    log_factors: Vec<f64>,
    log_prod: Vec<f64>,
    zero_count: Vec<u32>,
    base: Vec<f64>,
    log_num: Vec<f64>,
}

impl Scratch {
    fn new(max_degree: usize, k: usize) -> Self {
        Scratch {
            factors: vec![0.0; max_degree * k],
            log_factors: vec![0.0; max_degree * k],
            log_prod: vec![0.0; k],
            zero_count: vec![0; k],
            base: vec![0.0; k],
            log_num: vec![0.0; k],
        }
    }
}

impl BpEngine {
    pub fn new(g: &Graph) -> Result<Self> {
        Self::with_threads(g, 1)
    }

    pub fn with_threads(g: &Graph, threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::invalid("thread count must be at least 1"));
        }
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::invalid(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(BpEngine { mg: MessageGraph::new(g)?, threads, pool })
    }

    pub fn message_graph(&self) -> &MessageGraph {
        &self.mg
    }

    pub fn random_state(&self, k: usize, seed: u64) -> BpState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BpState::random(&self.mg, k, &mut rng)
    }

    /// One sweep over all directed messages; returns the largest absolute
    /// change of any stored belief entry (after damping).
    pub fn sweep(
        &self,
        params: &BlockModelParams,
        state: &mut BpState,
        damping: f64,
    ) -> Result<f64> {
        self.sweep_with_damping(params, state, damping)
    }

    /// Iterate sweeps until the belief change drops below `tol` or the sweep
    /// budget is exhausted, then refresh the marginals from the final messages.
    pub fn run(
        &self,
        params: &BlockModelParams,
        init: BpInit,
        tol: f64,
        max_sweeps: usize,
        damping: f64,
    ) -> Result<BpRun> {
        if tol <= 0.0 {
            return Err(Error::invalid("bp tolerance must be positive"));
        }
        let mut state = match init {
            BpInit::Random(seed) => self.random_state(params.k(), seed),
            BpInit::Warm(state) => state,
        };
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < max_sweeps {
            let change = self.sweep_with_damping(params, &mut state, damping)?;
            sweeps += 1;
            if change < tol {
                converged = true;
                break;
            }
        }
        self.refresh_marginals(params, &mut state)?;
        Ok(BpRun { state, sweeps, converged })
    }

    fn sweep_with_damping(
        &self,
        params: &BlockModelParams,
        state: &mut BpState,
        damping: f64,
    ) -> Result<f64> {
        self.check_inputs(params, state, damping)?;
        let h = self.external_field(params, &state.q1);
        let change = if self.threads == 1 {
            self.sweep_sequential_damped(params, &h, state, damping)?
        } else {
            self.sweep_jacobi_damped(params, &h, state, damping)?
        };
        debug_assert!(state.beliefs.validate().is_ok());
        debug_assert!(state.q1.validate().is_ok());
        Ok(change)
    }

    fn check_inputs(&self, params: &BlockModelParams, state: &BpState, damping: f64) -> Result<()> {
        if state.beliefs.k() != params.k() || state.q1.k() != params.k() {
            return Err(Error::invalid("state group count does not match params"));
        }
        if state.q1.node_count() != self.mg.node_count() {
            return Err(Error::invalid("state node count does not match graph"));
        }
        if !(0.0..1.0).contains(&damping) {
            return Err(Error::invalid("damping must lie in [0, 1)"));
        }
        Ok(())
    }

    /// `h_r = sum_s omega_rs * sum_i d_i q^i_s`, computed once per sweep.
    fn external_field(&self, params: &BlockModelParams, q1: &Marginals) -> Vec<f64> {
        let k = params.k();
        let n = self.mg.node_count();
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let d = self.mg.degree(i);
            for (s, &q) in q1.row(i).iter().enumerate() {
                mass[s] += d * q;
            }
        }
        let mut h = vec![0.0; k];
        for r in 0..k {
            let row = params.omega_row(r);
            h[r] = row.iter().zip(&mass).map(|(&w, &b)| w * b).sum();
        }
        h
    }

    fn sweep_sequential_damped(
        &self,
        params: &BlockModelParams,
        h: &[f64],
        state: &mut BpState,
        damping: f64,
    ) -> Result<f64> {
        let k = params.k();
        let n = self.mg.node_count();
        let mut scratch = Scratch::new(self.mg.max_out_degree(), k);
        let mut max_change = 0.0f64;
        let mut out = vec![0.0; self.mg.max_out_degree() * k];
        let mut q_row = vec![0.0; k];
        for i in 0..n {
            node_update(
                &self.mg,
                params,
                h,
                state.beliefs.as_slice(),
                i,
                &mut scratch,
                &mut out,
                &mut q_row,
            )?;
            // copy back with damping; messages of node i do not feed its own
            // update, so in-place writes stay Gauss-Seidel across nodes
            for (slot, e) in self.mg.out_range(i).enumerate() {
                let new_row = &out[slot * k..(slot + 1) * k];
                let row = state.beliefs.row_mut(e);
                for r in 0..k {
                    let updated = (1.0 - damping) * new_row[r] + damping * row[r];
                    max_change = max_change.max((updated - row[r]).abs());
                    row[r] = updated;
                }
            }
            state.q1.row_mut(i).copy_from_slice(&q_row);
        }
        Ok(max_change)
    }

    fn sweep_jacobi_damped(
        &self,
        params: &BlockModelParams,
        h: &[f64],
        state: &mut BpState,
        damping: f64,
    ) -> Result<f64> {
        let k = params.k();
        let n = self.mg.node_count();
        let old_mu = state.beliefs.as_slice().to_vec();
        let max_deg = self.mg.max_out_degree();

        // split the new message buffer into per-node out ranges
        let mut msg_slices: Vec<&mut [f64]> = Vec::with_capacity(n);
        let mut rest = state.beliefs.as_mut_slice();
        for i in 0..n {
            let len = self.mg.out_range(i).len() * k;
            let (head, tail) = rest.split_at_mut(len);
            msg_slices.push(head);
            rest = tail;
        }

        let mg = &self.mg;
        let pool = self.pool.as_ref().expect("jacobi mode implies a pool");
        let result: Result<f64> = pool.install(|| {
            msg_slices
                .into_par_iter()
                .zip(state.q1.as_mut_slice().par_chunks_mut(k))
                .enumerate()
                .map_init(
                    || (Scratch::new(max_deg, k), vec![0.0; max_deg * k], vec![0.0; k]),
                    |(scratch, out, q_row), (i, (msg_out, q_out))| -> Result<f64> {
                        node_update(mg, params, h, &old_mu, i, scratch, out, q_row)?;
                        let mut local_change = 0.0f64;
                        let deg = msg_out.len() / k;
                        for slot in 0..deg {
                            for r in 0..k {
                                let idx = slot * k + r;
                                let old = msg_out[idx];
                                let updated = (1.0 - damping) * out[idx] + damping * old;
                                local_change = local_change.max((updated - old).abs());
                                msg_out[idx] = updated;
                            }
                        }
                        q_out.copy_from_slice(q_row);
                        Ok(local_change)
                    },
                )
                .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
        });
        result
    }

    /// Recompute all one-node marginals from the current messages.
    pub fn refresh_marginals(&self, params: &BlockModelParams, state: &mut BpState) -> Result<()> {
        let k = params.k();
        let h = self.external_field(params, &state.q1);
        let mut scratch = Scratch::new(self.mg.max_out_degree(), k);
        let mut out = vec![0.0; self.mg.max_out_degree() * k];
        let mut q_row = vec![0.0; k];
        for i in 0..self.mg.node_count() {
            node_update(
                &self.mg,
                params,
                &h,
                state.beliefs.as_slice(),
                i,
                &mut scratch,
                &mut out,
                &mut q_row,
            )?;
            state.q1.row_mut(i).copy_from_slice(&q_row);
        }
        Ok(())
    }

    /// Two-node marginals on every edge:
    /// `q2[r][s] ~ omega_rs * mu[a->b][r] * mu[b->a][s]`, normalized per edge.
    /// With `include_exponential` the factor `exp(-d_a d_b omega_rs)` is kept
    /// instead of neglected.
    pub fn two_node_marginals(
        &self,
        params: &BlockModelParams,
        beliefs: &Beliefs,
        include_exponential: bool,
    ) -> Result<EdgeMarginals> {
        let k = params.k();
        if beliefs.k() != k {
            return Err(Error::invalid("beliefs group count does not match params"));
        }
        let m = self.mg.undirected_count();
        let mut blocks = vec![0.0; m * k * k];
        for u in 0..m {
            let (ab, ba) = self.mg.edge_dirs(u);
            let mu_ab = beliefs.row(ab);
            let mu_ba = beliefs.row(ba);
            let a = self.mg.source(ab);
            let b = self.mg.target(ab);
            let block = &mut blocks[u * k * k..(u + 1) * k * k];
            let mut sum = 0.0;
            for r in 0..k {
                for s in 0..k {
                    let mut v = params.omega(r, s) * mu_ab[r] * mu_ba[s];
                    if include_exponential {
                        v *= (-self.mg.degree(a) * self.mg.degree(b) * params.omega(r, s)).exp();
                    }
                    block[r * k + s] = v;
                    sum += v;
                }
            }
            if sum <= 0.0 {
                return Err(Error::DegenerateEdge { a, b });
            }
            for v in block.iter_mut() {
                *v /= sum;
            }
        }
        let q2 = EdgeMarginals::from_raw(k, blocks);
        debug_assert!(q2.validate().is_ok());
        Ok(q2)
    }
}

/// Compute node `i`'s outgoing messages (undamped) into `out` and its
/// marginal row into `q_row`. Reads messages from `mu`.
#[allow(clippy::too_many_arguments)]
fn node_update(
    mg: &MessageGraph,
    params: &BlockModelParams,
    h: &[f64],
    mu: &[f64],
    i: usize,
    scratch: &mut Scratch,
    out: &mut [f64],
    q_row: &mut [f64],
) -> Result<()> {
    let k = params.k();
    let range = mg.out_range(i);
    let deg = range.len();
    let d_i = mg.degree(i);

    // incoming factors and their logs
    scratch.log_prod[..k].fill(0.0);
    scratch.zero_count[..k].fill(0);
    for (slot, e) in range.clone().enumerate() {
        let rev = mg.reverse(e);
        let mu_in = &mu[rev * k..(rev + 1) * k];
        for r in 0..k {
            let row = params.omega_row(r);
            let mut t = 0.0;
            for s in 0..k {
                t += row[s] * mu_in[s];
            }
            let idx = slot * k + r;
            scratch.factors[idx] = t;
            if t > 0.0 {
                let lt = t.ln();
                scratch.log_factors[idx] = lt;
                scratch.log_prod[r] += lt;
            } else {
                scratch.log_factors[idx] = f64::NEG_INFINITY;
                scratch.zero_count[r] += 1;
            }
        }
    }
    for r in 0..k {
        scratch.base[r] = ln_or_neg_inf(params.gamma()[r]) - d_i * h[r];
    }

    // marginal over all neighbors
    for r in 0..k {
        scratch.log_num[r] = if scratch.zero_count[r] > 0 {
            f64::NEG_INFINITY
        } else {
            scratch.base[r] + scratch.log_prod[r]
        };
    }
    normalize_log(&scratch.log_num[..k], q_row)
        .ok_or_else(|| Error::invalid(format!("marginal renormalization failure at node {i}")))?;

    // messages exclude one incoming factor each
    for slot in 0..deg {
        for r in 0..k {
            let idx = slot * k + r;
            let zeros_without = scratch.zero_count[r]
                - u32::from(scratch.factors[idx] == 0.0);
            scratch.log_num[r] = if zeros_without > 0 {
                f64::NEG_INFINITY
            } else {
                let excluded = if scratch.factors[idx] > 0.0 {
                    scratch.log_factors[idx]
                } else {
                    0.0
                };
                scratch.base[r] + scratch.log_prod[r] - excluded
            };
        }
        let dst = &mut out[slot * k..(slot + 1) * k];
        normalize_log(&scratch.log_num[..k], dst).ok_or_else(|| Error::RenormalizationFailure {
            from: i,
            to: mg.target(range.start + slot),
        })?;
    }
    Ok(())
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Normalize `exp(log_num)` into `dst`; None when every entry is zero.
fn normalize_log(log_num: &[f64], dst: &mut [f64]) -> Option<()> {
    let max = log_num.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut sum = 0.0;
    for (d, &l) in dst.iter_mut().zip(log_num) {
        let v = (l - max).exp();
        *d = v;
        sum += v;
    }
    for d in dst.iter_mut() {
        *d /= sum;
    }
    Some(())
}

