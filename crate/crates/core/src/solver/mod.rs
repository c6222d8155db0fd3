//! Primal-dual engines for separable saddle-point problems:
//!
//! * AdaSPDC: stochastic block updates with per-block dual steps `sigma_i`
//!   driven by each block's coupling norm `R_i`, and primal step and
//!   extrapolation driven by the largest norm among the sampled blocks.
//! * SPDC: the same iteration with every norm replaced by the global
//!   `R = max_i R_i`.
//! * PDCP: the batch primal-dual method with constant steps and `theta = 1`.

mod engine;
mod run;
mod schedule;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::{adaspdc_iteration, pdcp_iteration, spdc_iteration, Solver, SolverState};
pub use run::{run, run_from, RunFailure, RunOutput, TraceRecord};
pub use schedule::{
    compute_sigma, compute_tau, compute_theta, sample_blocks, BlockSampler, StepSchedule,
};

use crate::error::{Error, Result};
use crate::losses::DEFAULT_NEWTON_ITERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    AdaSpdc,
    Spdc,
    Pdcp,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::AdaSpdc => "adaspdc",
            Variant::Spdc => "spdc",
            Variant::Pdcp => "pdcp",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adaspdc" => Ok(Variant::AdaSpdc),
            "spdc" => Ok(Variant::Spdc),
            "pdcp" => Ok(Variant::Pdcp),
            other => Err(Error::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Blocks sampled per iteration (ignored by PDCP).
    pub m: usize,
    /// Stop once this many effective passes (n block updates each) are done.
    pub max_passes: f64,
    pub seed: u64,
    /// Recompute `r = (1/n) A y` from scratch every this many iterations;
    /// 0 disables.
    pub r_recompute_interval: u64,
    pub newton_iters: usize,
    /// Passes between trace records.
    pub trace_stride: f64,
    /// Fill `elapsed_ms` from the wall clock; otherwise it stays 0 so traces
    /// are reproducible byte for byte.
    pub record_time: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            variant: Variant::AdaSpdc,
            m: 1,
            max_passes: 10.0,
            seed: 0,
            r_recompute_interval: 1000,
            newton_iters: DEFAULT_NEWTON_ITERS,
            trace_stride: 1.0,
            record_time: false,
        }
    }
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        SolverConfig {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.variant != Variant::Pdcp && (self.m == 0 || self.m > n) {
            return Err(Error::invalid(format!(
                "need 1 <= m <= n, got m={}, n={n}",
                self.m
            )));
        }
        if !(self.max_passes >= 0.0) || !self.max_passes.is_finite() {
            return Err(Error::invalid("max_passes must be finite and non-negative"));
        }
        if !(self.trace_stride > 0.0) {
            return Err(Error::invalid("trace_stride must be positive"));
        }
        Ok(())
    }
}
