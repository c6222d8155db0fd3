//! Adaptive stochastic primal-dual coordinate methods for regularized
//! empirical risk minimization posed as a separable saddle-point problem
//!
//! `min_x max_y  g(x) + (1/n) sum_i ( <x, A_i y_i> - phi_i*(y_i) )`
//!
//! with `g(x) = (lambda/2)||x||^2` and column blocks `A_i`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod blockmat;
pub mod data;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod solver;

pub use blockmat::BlockMatrix;
pub use data::Dataset;
pub use error::{Error, Result};
pub use losses::{LossKind, SaddleProblem};
pub use solver::{run, RunOutput, Solver, SolverConfig, SolverState, TraceRecord, Variant};
