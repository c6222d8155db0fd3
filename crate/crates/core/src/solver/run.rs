use std::time::Instant;

use serde::Serialize;

use super::engine::{Solver, SolverState};
use super::SolverConfig;
use crate::blockmat::BlockMatrix;
use crate::error::Error;
use crate::losses::SaddleProblem;

/// One row of a convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    /// Effective passes, `block_updates / n`.
    pub pass: f64,
    pub objective: f64,
    /// `objective - reference`, unclamped; `None` without a reference.
    pub suboptimality: Option<f64>,
    pub elapsed_ms: f64,
    pub seed: u64,
    pub iteration: u64,
    /// Extrapolation weight of the last iteration; `None` before the first.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub state: SolverState,
    pub newton_unconverged: u64,
}

/// A failed run, with every trace record emitted before the failure.
#[derive(Debug, thiserror::Error)]
#[error("run failed after {} trace records: {error}", trace.len())]
pub struct RunFailure {
    pub trace: Vec<TraceRecord>,
    #[source]
    pub error: Error,
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

/// Runs the configured solver from `x = 0, y = 0` until `max_passes`
/// effective passes are done.
pub fn run(
    problem: &SaddleProblem,
    a: &BlockMatrix,
    config: &SolverConfig,
    reference_objective: Option<f64>,
) -> Result<RunOutput, RunFailure> {
    run_from(problem, a, config, reference_objective, SolverState::zeros(a))
}

pub fn run_from(
    problem: &SaddleProblem,
    a: &BlockMatrix,
    config: &SolverConfig,
    reference_objective: Option<f64>,
    mut state: SolverState,
) -> Result<RunOutput, RunFailure> {
    let mut trace = Vec::new();
    let fail = |trace: Vec<TraceRecord>, error: Error| RunFailure { trace, error };

    let mut solver = match Solver::new(problem, a, config.clone()) {
        Ok(s) => s,
        Err(e) => return Err(fail(trace, e)),
    };
    let n = a.num_blocks();
    let start = Instant::now();
    let record = |state: &SolverState, theta: Option<f64>| -> Result<TraceRecord, Error> {
        let objective = problem.primal_objective(a, &state.x)?;
        Ok(TraceRecord {
            pass: state.passes(n),
            objective,
            suboptimality: reference_objective.map(|r| objective - r),
            elapsed_ms: if config.record_time {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
            seed: config.seed,
            iteration: state.t,
            theta,
        })
    };

    match record(&state, None) {
        Ok(r) => trace.push(r),
        Err(e) => return Err(fail(trace, e)),
    }
    let target = (config.max_passes * n as f64).ceil() as u64;
    let stride_updates = config.trace_stride * n as f64;
    let mut next_mark = 1.0;
    let mut last_theta = None;
    let mut recorded_at = state.block_updates;
    while state.block_updates < target {
        match solver.step(&mut state) {
            Ok(s) => last_theta = Some(s.theta),
            Err(e) => return Err(fail(trace, e)),
        }
        if config.r_recompute_interval > 0 && state.t.is_multiple_of(config.r_recompute_interval) {
            state.recompute_r(a);
        }
        if state.block_updates as f64 >= next_mark * stride_updates - 1e-9 {
            match record(&state, last_theta) {
                Ok(r) => trace.push(r),
                Err(e) => return Err(fail(trace, e)),
            }
            recorded_at = state.block_updates;
            next_mark = (state.block_updates as f64 / stride_updates + 1e-9).floor() + 1.0;
        }
    }
    if recorded_at != state.block_updates {
        match record(&state, last_theta) {
            Ok(r) => trace.push(r),
            Err(e) => return Err(fail(trace, e)),
        }
    }
    Ok(RunOutput {
        trace,
        newton_unconverged: solver.newton_unconverged(),
        state,
    })
}
