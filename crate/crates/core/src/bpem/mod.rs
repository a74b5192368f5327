//! EM fitting of the degree-corrected block model with belief propagation as
//! the E-step.
//!
//! A fit alternates: converge messages for the current parameters
//! ([`BpEngine::run`]), read off one- and two-node marginals, update
//! parameters in closed form ([`m_step`]), and repeat until the parameters
//! stop moving. Several jittered restarts are run and the one with the best
//! expected complete-data log-likelihood wins.

mod beliefs;
mod message_graph;
mod mstep;
mod oracle;
mod pairing;
mod sweep;

pub use beliefs::{Beliefs, EdgeMarginals, Marginals, NORMALIZATION_TOL};
pub use message_graph::MessageGraph;
pub use mstep::{m_step, objective_proxy, MStep, COLLAPSE_FRACTION};
pub use oracle::{
    exact_posterior, exact_posterior_with_limit, exact_surrogate_posterior, ExactPosterior,
    DEFAULT_STATE_LIMIT,
};
pub use pairing::{pair_submarkets, SubmarketMap};
pub use sweep::{BpEngine, BpInit, BpRun, BpState};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Dirichlet;

use crate::dcsbm::BlockModelParams;
use crate::graph::Graph;
use crate::modularity::Partition;
use crate::{Error, Result};

/// Knobs for [`fit`]; the defaults are the reference configuration.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub restarts: usize,
    pub bp_tol: f64,
    pub max_sweeps: usize,
    pub damping: f64,
    pub em_tol: f64,
    pub max_em_iters: usize,
    /// 1 = deterministic sequential sweeps; more = Jacobi sweeps in parallel.
    pub threads: usize,
    /// Keep the pair factor `exp(-d_i d_j omega_rs)` in two-node marginals
    /// instead of neglecting it (sensitivity checks only).
    pub include_pair_exponential: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 10,
            bp_tol: 1e-6,
            max_sweeps: 500,
            damping: 0.1,
            em_tol: 1e-6,
            max_em_iters: 100,
            threads: 1,
            include_pair_exponential: false,
        }
    }
}

/// One EM iteration of the winning restart.
#[derive(Debug, Clone, Copy)]
pub struct EmIteration {
    pub param_change: f64,
    pub bp_sweeps: usize,
    pub bp_converged: bool,
    pub objective: f64,
}

/// Summary of one restart, kept for all restarts.
#[derive(Debug, Clone, Copy)]
pub struct RestartOutcome {
    pub restart: usize,
    pub objective: f64,
    pub converged: bool,
    pub degenerate: bool,
    pub em_iterations: usize,
}

/// Output of [`fit`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: BlockModelParams,
    pub marginals: Marginals,
    pub assignment: Partition,
    pub history: Vec<EmIteration>,
    pub converged: bool,
    pub restart_outcomes: Vec<RestartOutcome>,
}

struct RestartResult {
    params: BlockModelParams,
    state: BpState,
    history: Vec<EmIteration>,
    converged: bool,
    degenerate: bool,
    objective: f64,
}

/// Fit `k` groups to a connected simple graph. Deterministic given the seed
/// and thread count 1; restart `r` draws from stream `r` of the seed.
pub fn fit(g: &Graph, k: usize, seed: u64, options: &FitOptions) -> Result<FitResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if g.node_count() == 0 || g.edge_count() == 0 {
        return Err(Error::EmptyInput("fit needs a graph with at least one edge"));
    }
    if !g.is_simple() {
        return Err(Error::invalid("fit requires a simple graph"));
    }
    if !g.is_connected() {
        return Err(Error::invalid(
            "fit requires a connected graph; extract the largest component first",
        ));
    }
    if options.restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    if !(0.0..1.0).contains(&options.damping) {
        return Err(Error::invalid("damping must lie in [0, 1)"));
    }
    if options.bp_tol <= 0.0 || options.em_tol <= 0.0 {
        return Err(Error::invalid("tolerances must be positive"));
    }

    let engine = BpEngine::with_threads(g, options.threads)?;
    let mut outcomes = Vec::with_capacity(options.restarts);
    let mut best: Option<RestartResult> = None;

    for restart in 0..options.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let run = run_restart(g, &engine, k, options, &mut rng)?;
        outcomes.push(RestartOutcome {
            restart,
            objective: run.objective,
            converged: run.converged,
            degenerate: run.degenerate,
            em_iterations: run.history.len(),
        });
        if run.degenerate {
            continue;
        }
        let better = best.as_ref().map_or(true, |b| run.objective > b.objective);
        if better {
            best = Some(run);
        }
    }

    let best = best.ok_or(Error::DegenerateFit { restarts: options.restarts })?;
    let labels = best.state.q1.argmax_labels();
    let assignment = Partition::with_group_count(labels, k)?;
    Ok(FitResult {
        params: best.params,
        marginals: best.state.q1,
        assignment,
        history: best.history,
        converged: best.converged,
        restart_outcomes: outcomes,
    })
}

fn run_restart(
    g: &Graph,
    engine: &BpEngine,
    k: usize,
    options: &FitOptions,
    rng: &mut ChaCha8Rng,
) -> Result<RestartResult> {
    let mut params = initial_params(g, k, rng)?;
    let mut state = BpState::random(engine.message_graph(), k, rng);
    let mut history: Vec<EmIteration> = Vec::new();
    let mut reseeded = false;
    let mut converged = false;
    let mut degenerate = false;
    let mut objective = f64::NEG_INFINITY;

    for _ in 0..options.max_em_iters {
        let run = engine.run(
            &params,
            BpInit::Warm(state),
            options.bp_tol,
            options.max_sweeps,
            options.damping,
        )?;
        state = run.state;
        let q2 = engine.two_node_marginals(&params, &state.beliefs, options.include_pair_exponential)?;
        let step = m_step(g, &state.q1, &q2)?;

        if !step.collapsed.is_empty() {
            if reseeded {
                degenerate = true;
                break;
            }
            reseeded = true;
            params = reseed_groups(&step.params, &step.collapsed, rng)?;
            continue;
        }

        let change = max_param_change(&params, &step.params);
        objective = objective_proxy(g, &state.q1, &q2, &step.params);
        params = step.params;
        history.push(EmIteration {
            param_change: change,
            bp_sweeps: run.sweeps,
            bp_converged: run.converged,
            objective,
        });
        if change < options.em_tol {
            converged = true;
            break;
        }
    }

    if history.is_empty() && !degenerate {
        return Err(Error::invalid("em loop made no iterations"));
    }
    Ok(RestartResult {
        params,
        state,
        history,
        converged,
        degenerate,
        objective: if degenerate { f64::NEG_INFINITY } else { objective },
    })
}

/// Jittered flat start: `gamma` uniform mixed with a Dirichlet draw, `omega`
/// flat at `2m / (sum d)^2` with symmetric relative jitter. The flat point is
/// a fixed point of the updates, so the jitter is what breaks symmetry.
fn initial_params(g: &Graph, k: usize, rng: &mut ChaCha8Rng) -> Result<BlockModelParams> {
    let total_degree: f64 = g.degrees().iter().sum();
    let base = if total_degree > 0.0 {
        2.0 * g.edge_count() as f64 / (total_degree * total_degree)
    } else {
        return Err(Error::EmptyInput("graph has no degree mass"));
    };
    if k == 1 {
        return BlockModelParams::new(vec![1.0], vec![base]);
    }

    let dirichlet = Dirichlet::new(&vec![1.0; k])
        .map_err(|_| Error::invalid("dirichlet init failed"))?;
    let jitter: Vec<f64> = rng.sample(dirichlet);
    let mix = 0.2;
    let mut gamma: Vec<f64> = (0..k)
        .map(|r| (1.0 - mix) / k as f64 + mix * jitter[r])
        .collect();
    let gamma_sum: f64 = gamma.iter().sum();
    for gm in gamma.iter_mut() {
        *gm /= gamma_sum;
    }

    let eps = 0.5;
    let mut omega = vec![0.0; k * k];
    for r in 0..k {
        for s in r..k {
            let u: f64 = rng.gen_range(-0.5..0.5);
            let v = base * (1.0 + eps * u);
            omega[r * k + s] = v;
            omega[s * k + r] = v;
        }
    }
    BlockModelParams::new(gamma, omega)
}

/// Replace a collapsed group's prior and affinity row with the global average
/// plus jitter. Called at most once per restart.
fn reseed_groups(
    params: &BlockModelParams,
    collapsed: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<BlockModelParams> {
    let k = params.k();
    let mut gamma = params.gamma().to_vec();
    let mut omega = params.omega_flat().to_vec();
    let mean_row: Vec<f64> = (0..k)
        .map(|s| (0..k).map(|r| params.omega(r, s)).sum::<f64>() / k as f64)
        .collect();
    let omega_scale = mean_row.iter().sum::<f64>() / k as f64;
    for &r in collapsed {
        gamma[r] = (1.0 / k as f64) * (1.0 + 0.2 * rng.gen_range(-0.5..0.5));
        for s in 0..k {
            let fallback = if mean_row[s] > 0.0 { mean_row[s] } else { omega_scale };
            let v = fallback * (1.0 + 0.2 * rng.gen_range(-0.5..0.5));
            omega[r * k + s] = v;
            omega[s * k + r] = v;
        }
    }
    let gamma_sum: f64 = gamma.iter().sum();
    for gm in gamma.iter_mut() {
        *gm /= gamma_sum;
    }
    BlockModelParams::new(gamma, omega)
}

fn max_param_change(old: &BlockModelParams, new: &BlockModelParams) -> f64 {
    let gamma_change = old
        .gamma()
        .iter()
        .zip(new.gamma())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let omega_change = old
        .omega_flat()
        .iter()
        .zip(new.omega_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    gamma_change.max(omega_change)
}
