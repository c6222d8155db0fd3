use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::schedule::{
    compute_sigma, compute_tau, compute_theta, sample_blocks, BlockSampler, StepSchedule,
};
use super::{SolverConfig, Variant};
use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::losses::{primal_prox_l2_into, SaddleProblem};

/// Iterates of a primal-dual run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    /// Stacked dual vector, one entry per matrix column.
    pub y: Vec<f64>,
    /// Extrapolated primal point fed to the next dual step.
    pub x_bar: Vec<f64>,
    /// Primal iterate before the last step.
    pub x_prev: Vec<f64>,
    /// Running `(1/n) sum_i A_i y_i`.
    pub r: Vec<f64>,
    pub t: u64,
    pub block_updates: u64,
}

impl SolverState {
    /// `x = 0`, `y = 0`, `x_bar = x`.
    pub fn zeros(a: &BlockMatrix) -> Self {
        let d = a.rows();
        SolverState {
            x: vec![0.0; d],
            y: vec![0.0; a.total_cols()],
            x_bar: vec![0.0; d],
            x_prev: vec![0.0; d],
            r: vec![0.0; d],
            t: 0,
            block_updates: 0,
        }
    }

    /// Starts from a given primal-dual pair with `x_bar = x_prev = x`.
    pub fn from_point(a: &BlockMatrix, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Error::check_len("initial x", a.rows(), x.len())?;
        Error::check_len("initial y", a.total_cols(), y.len())?;
        let mut state = SolverState {
            x_bar: x.clone(),
            x_prev: x.clone(),
            x,
            y,
            r: Vec::new(),
            t: 0,
            block_updates: 0,
        };
        state.r = state.exact_r(a);
        Ok(state)
    }

    pub fn passes(&self, n: usize) -> f64 {
        self.block_updates as f64 / n as f64
    }

    pub fn exact_r(&self, a: &BlockMatrix) -> Vec<f64> {
        let n = a.num_blocks() as f64;
        let mut r = vec![0.0; a.rows()];
        for i in 0..a.num_blocks() {
            a.add_block_matvec_unchecked(i, &self.y[a.block_range(i)], 1.0 / n, &mut r);
        }
        r
    }

    /// Replaces `r` by its exact value; returns the drift that was removed.
    pub fn recompute_r(&mut self, a: &BlockMatrix) -> f64 {
        let exact = self.exact_r(a);
        let drift = self
            .r
            .iter()
            .zip(&exact)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        self.r = exact;
        drift
    }
}

#[derive(Debug, Clone, Copy)]
enum Coupling {
    PerBlock,
    Global(f64),
}

#[derive(Debug, Clone, Default)]
struct Workspace {
    delta_sum: Vec<f64>,
    inner: Vec<f64>,
    u: Vec<f64>,
    x_new: Vec<f64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        Workspace {
            delta_sum: vec![0.0; d],
            inner: Vec::new(),
            u: vec![0.0; d],
            x_new: vec![0.0; d],
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn non_finite(state: &SolverState, sampled: &[usize], message: &str) -> Error {
    Error::NonFinite {
        iteration: state.t,
        sampled: sampled.to_vec(),
        message: message.to_string(),
    }
}

/// One stochastic primal-dual iteration over the given sampled blocks.
/// Returns the schedule used and the number of inexact dual solves.
#[allow(clippy::too_many_arguments)]
fn coordinate_step(
    state: &mut SolverState,
    problem: &SaddleProblem,
    a: &BlockMatrix,
    coupling: Coupling,
    sampled: &[usize],
    newton_iters: usize,
    ws: &mut Workspace,
) -> Result<(StepSchedule, u64)> {
    let n = a.num_blocks();
    let m = sampled.len();
    let (lambda, gamma) = (problem.lambda, problem.gamma());

    let r_max = match coupling {
        Coupling::PerBlock => sampled
            .iter()
            .map(|&i| a.norm_cached(i))
            .fold(0.0, f64::max),
        Coupling::Global(r) => r,
    };
    let tau = compute_tau(r_max, n, m, lambda, gamma)?;
    let theta = compute_theta(r_max, n, m, lambda, gamma)?;
    if !(tau > 0.0) || !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Numerical(format!(
            "step sizes out of range at iteration {}: tau={tau}, theta={theta}",
            state.t
        )));
    }

    let mut sigmas = Vec::with_capacity(m);
    let mut unconverged = 0;
    ws.delta_sum.iter_mut().for_each(|v| *v = 0.0);
    for &i in sampled {
        let r_i = match coupling {
            Coupling::PerBlock => a.norm_cached(i),
            Coupling::Global(r) => r,
        };
        let sigma = compute_sigma(r_i, n, m, lambda, gamma)?;
        let expected = 1.0 / (4.0 * r_i * r_max);
        if ((sigma * tau) - expected).abs() > 1e-12 * expected {
            return Err(Error::Numerical(format!(
                "sigma*tau = {} deviates from 1/(4 R_i R_max) = {expected}",
                sigma * tau
            )));
        }
        sigmas.push(sigma);

        let range = a.block_range(i);
        ws.inner.resize(range.len(), 0.0);
        a.block_column_dot_unchecked(i, &state.x_bar, &mut ws.inner);
        for (slot, k) in range.clone().enumerate() {
            let y_old = state.y[k];
            let (y_new, ok) = problem.dual_prox(k, ws.inner[slot], y_old, sigma, newton_iters)?;
            if !ok {
                unconverged += 1;
            }
            // reuse `inner` for the block's dual change
            ws.inner[slot] = y_new - y_old;
            state.y[k] = y_new;
        }
        if !all_finite(&state.y[range]) {
            return Err(non_finite(state, sampled, "dual update"));
        }
        a.add_block_matvec_unchecked(i, &ws.inner, 1.0, &mut ws.delta_sum);
    }

    let inv_m = 1.0 / m as f64;
    for ((u, r), s) in ws.u.iter_mut().zip(&state.r).zip(&ws.delta_sum) {
        *u = r + inv_m * s;
    }
    primal_prox_l2_into(&state.x, &ws.u, tau, lambda, &mut ws.x_new)?;
    std::mem::swap(&mut state.x_prev, &mut state.x);
    std::mem::swap(&mut state.x, &mut ws.x_new);
    for ((xb, x), xp) in state.x_bar.iter_mut().zip(&state.x).zip(&state.x_prev) {
        *xb = x + theta * (x - xp);
    }
    let inv_n = 1.0 / n as f64;
    for (r, s) in state.r.iter_mut().zip(&ws.delta_sum) {
        *r += inv_n * s;
    }
    if !all_finite(&state.x) || !all_finite(&state.x_bar) || !all_finite(&state.r) {
        return Err(non_finite(state, sampled, "primal update"));
    }

    state.t += 1;
    state.block_updates += m as u64;
    Ok((
        StepSchedule {
            sampled: sampled.to_vec(),
            sigma: sigmas,
            tau,
            theta,
            r_max,
            m,
            n,
        },
        unconverged,
    ))
}

/// Constant PDCP steps with `tau * sigma = 1 / (2 ||K||^2)`, `K = A / n`,
/// balanced by the strong-convexity moduli `lambda` of `g` and `gamma / n` of
/// the scaled conjugate.
fn pdcp_steps(problem: &SaddleProblem, a: &BlockMatrix) -> Result<(f64, f64, f64)> {
    let n = a.num_blocks() as f64;
    let a_norm = a.operator_norm();
    if !(a_norm > 0.0) {
        return Err(Error::invalid("PDCP needs a non-zero coupling matrix"));
    }
    let k_norm = a_norm / n;
    let ratio = (n * problem.lambda / problem.gamma()).sqrt();
    let sigma = ratio / (std::f64::consts::SQRT_2 * k_norm);
    let tau = 1.0 / (ratio * std::f64::consts::SQRT_2 * k_norm);
    Ok((sigma, tau, a_norm))
}

fn pdcp_step(
    state: &mut SolverState,
    problem: &SaddleProblem,
    a: &BlockMatrix,
    (sigma, tau, a_norm): (f64, f64, f64),
    newton_iters: usize,
    ws: &mut Workspace,
) -> Result<(StepSchedule, u64)> {
    let n = a.num_blocks();
    // The batch dual objective carries a 1/n factor, so each block sees step sigma/n.
    let block_sigma = sigma / n as f64;
    let mut unconverged = 0;
    for i in 0..n {
        let range = a.block_range(i);
        ws.inner.resize(range.len(), 0.0);
        a.block_column_dot_unchecked(i, &state.x_bar, &mut ws.inner);
        for (slot, k) in range.enumerate() {
            let (y_new, ok) =
                problem.dual_prox(k, ws.inner[slot], state.y[k], block_sigma, newton_iters)?;
            if !ok {
                unconverged += 1;
            }
            state.y[k] = y_new;
        }
    }
    let all: Vec<usize> = (0..n).collect();
    if !all_finite(&state.y) {
        return Err(non_finite(state, &all, "dual update"));
    }
    state.r = state.exact_r(a);
    primal_prox_l2_into(&state.x, &state.r, tau, problem.lambda, &mut ws.x_new)?;
    std::mem::swap(&mut state.x_prev, &mut state.x);
    std::mem::swap(&mut state.x, &mut ws.x_new);
    for ((xb, x), xp) in state.x_bar.iter_mut().zip(&state.x).zip(&state.x_prev) {
        *xb = 2.0 * x - xp;
    }
    if !all_finite(&state.x) || !all_finite(&state.x_bar) {
        return Err(non_finite(state, &all, "primal update"));
    }
    state.t += 1;
    state.block_updates += n as u64;
    Ok((
        StepSchedule {
            sampled: all,
            sigma: vec![block_sigma; n],
            tau,
            theta: 1.0,
            r_max: a_norm,
            m: n,
            n,
        },
        unconverged,
    ))
}

/// Blocks with a non-zero coupling norm; zero blocks never influence `x`
/// and are left out of sampling.
fn active_blocks(a: &BlockMatrix) -> Vec<usize> {
    (0..a.num_blocks())
        .filter(|&i| a.norm_cached(i) > 0.0)
        .collect()
}

fn check_inputs(
    state: &SolverState,
    problem: &SaddleProblem,
    a: &BlockMatrix,
    config: &SolverConfig,
) -> Result<()> {
    problem.check_matrix(a)?;
    config.validate(a.num_blocks())?;
    Error::check_len("state x", a.rows(), state.x.len())?;
    Error::check_len("state y", a.total_cols(), state.y.len())?;
    Ok(())
}

fn sample_active<R: Rng + ?Sized>(a: &BlockMatrix, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    let active = active_blocks(a);
    let picks = sample_blocks(active.len(), m, rng)?;
    Ok(picks.into_iter().map(|k| active[k]).collect())
}

/// One AdaSPDC iteration: sample `m` blocks, take per-block dual steps, a
/// primal step, extrapolate and update `r`.
pub fn adaspdc_iteration<R: Rng + ?Sized>(
    state: &mut SolverState,
    problem: &SaddleProblem,
    a: &BlockMatrix,
    config: &SolverConfig,
    rng: &mut R,
) -> Result<StepSchedule> {
    check_inputs(state, problem, a, config)?;
    let sampled = sample_active(a, config.m, rng)?;
    let mut ws = Workspace::new(a.rows());
    coordinate_step(
        state,
        problem,
        a,
        Coupling::PerBlock,
        &sampled,
        config.newton_iters,
        &mut ws,
    )
    .map(|(s, _)| s)
}

/// One SPDC iteration: as AdaSPDC with every norm replaced by `max_i R_i`.
pub fn spdc_iteration<R: Rng + ?Sized>(
    state: &mut SolverState,
    problem: &SaddleProblem,
    a: &BlockMatrix,
    config: &SolverConfig,
    rng: &mut R,
) -> Result<StepSchedule> {
    check_inputs(state, problem, a, config)?;
    let global = a.spectral_norms().into_iter().fold(0.0, f64::max);
    let sampled = sample_active(a, config.m, rng)?;
    let mut ws = Workspace::new(a.rows());
    coordinate_step(
        state,
        problem,
        a,
        Coupling::Global(global),
        &sampled,
        config.newton_iters,
        &mut ws,
    )
    .map(|(s, _)| s)
}

/// One batch PDCP iteration.
pub fn pdcp_iteration(
    state: &mut SolverState,
    problem: &SaddleProblem,
    a: &BlockMatrix,
    config: &SolverConfig,
) -> Result<StepSchedule> {
    check_inputs(state, problem, a, config)?;
    let steps = pdcp_steps(problem, a)?;
    let mut ws = Workspace::new(a.rows());
    pdcp_step(state, problem, a, steps, config.newton_iters, &mut ws).map(|(s, _)| s)
}

/// Stateful driver for repeated iterations: owns the RNG, the sampler and
/// scratch buffers, and caches the constants each variant needs.
#[derive(Debug)]
pub struct Solver<'a> {
    problem: &'a SaddleProblem,
    a: &'a BlockMatrix,
    config: SolverConfig,
    rng: ChaCha8Rng,
    sampler: Option<BlockSampler>,
    coupling: Coupling,
    pdcp: Option<(f64, f64, f64)>,
    ws: Workspace,
    newton_unconverged: u64,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a SaddleProblem, a: &'a BlockMatrix, config: SolverConfig) -> Result<Self> {
        problem.check_matrix(a)?;
        config.validate(a.num_blocks())?;
        let (sampler, coupling, pdcp) = match config.variant {
            Variant::Pdcp => (None, Coupling::PerBlock, Some(pdcp_steps(problem, a)?)),
            Variant::AdaSpdc | Variant::Spdc => {
                let sampler = BlockSampler::new(active_blocks(a), config.m)?;
                let coupling = if config.variant == Variant::Spdc {
                    Coupling::Global(a.spectral_norms().into_iter().fold(0.0, f64::max))
                } else {
                    Coupling::PerBlock
                };
                (Some(sampler), coupling, None)
            }
        };
        Ok(Solver {
            problem,
            a,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            sampler,
            coupling,
            pdcp,
            ws: Workspace::new(a.rows()),
            newton_unconverged: 0,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Logistic dual solves that stopped before reaching their tolerance.
    pub fn newton_unconverged(&self) -> u64 {
        self.newton_unconverged
    }

    pub fn step(&mut self, state: &mut SolverState) -> Result<StepSchedule> {
        let (schedule, unconverged) = match (&mut self.sampler, self.pdcp) {
            (_, Some(steps)) => pdcp_step(
                state,
                self.problem,
                self.a,
                steps,
                self.config.newton_iters,
                &mut self.ws,
            )?,
            (Some(sampler), None) => {
                let sampled = sampler.draw(&mut self.rng).to_vec();
                coordinate_step(
                    state,
                    self.problem,
                    self.a,
                    self.coupling,
                    &sampled,
                    self.config.newton_iters,
                    &mut self.ws,
                )?
            }
            (None, None) => unreachable!("solver without sampler or batch steps"),
        };
        self.newton_unconverged += unconverged;
        Ok(schedule)
    }

    /// Runs one stochastic iteration over an explicit block set instead of a
    /// sampled one.
    pub fn step_blocks(&mut self, state: &mut SolverState, blocks: &[usize]) -> Result<StepSchedule> {
        if self.pdcp.is_some() {
            return Err(Error::invalid("PDCP always updates every block"));
        }
        if blocks.is_empty() || blocks.iter().any(|&i| i >= self.a.num_blocks()) {
            return Err(Error::invalid("block set must be non-empty and in range"));
        }
        let (schedule, unconverged) = coordinate_step(
            state,
            self.problem,
            self.a,
            self.coupling,
            blocks,
            self.config.newton_iters,
            &mut self.ws,
        )?;
        self.newton_unconverged += unconverged;
        Ok(schedule)
    }
}
