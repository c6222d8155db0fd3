//! Step-size rules and block sampling.

use rand::Rng;

use crate::error::{Error, Result};

fn check_params(r: f64, n: usize, m: usize, lambda: f64, gamma: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!(
            "coupling norm must be positive and finite, got {r}"
        )));
    }
    if m == 0 || m > n {
        return Err(Error::invalid(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    if !(lambda > 0.0) || !(gamma > 0.0) {
        return Err(Error::invalid(format!(
            "lambda and gamma must be positive, got {lambda}, {gamma}"
        )));
    }
    Ok(())
}

/// Dual step for a block with coupling norm `r_block`:
/// `sqrt(n lambda / (m gamma)) / (2 r_block)`.
pub fn compute_sigma(r_block: f64, n: usize, m: usize, lambda: f64, gamma: f64) -> Result<f64> {
    check_params(r_block, n, m, lambda, gamma)?;
    Ok((n as f64 * lambda / (m as f64 * gamma)).sqrt() / (2.0 * r_block))
}

/// Primal step: `sqrt(m gamma / (n lambda)) / (2 r_max)`.
pub fn compute_tau(r_max: f64, n: usize, m: usize, lambda: f64, gamma: f64) -> Result<f64> {
    check_params(r_max, n, m, lambda, gamma)?;
    Ok((m as f64 * gamma / (n as f64 * lambda)).sqrt() / (2.0 * r_max))
}

/// Extrapolation weight: `1 - 1 / (n/m + r_max sqrt((n/m) / (lambda gamma)))`.
pub fn compute_theta(r_max: f64, n: usize, m: usize, lambda: f64, gamma: f64) -> Result<f64> {
    check_params(r_max, n, m, lambda, gamma)?;
    let ratio = n as f64 / m as f64;
    Ok(1.0 - 1.0 / (ratio + r_max * (ratio / (lambda * gamma)).sqrt()))
}

/// Uniform random `m`-subset of `0..n`, without replacement.
pub fn sample_blocks<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    let mut pool: Vec<usize> = (0..n).collect();
    partial_shuffle(&mut pool, m, rng);
    pool.truncate(m);
    Ok(pool)
}

/// Moves a uniformly random ordered `m`-subset to the front of `pool`.
fn partial_shuffle<R: Rng + ?Sized>(pool: &mut [usize], m: usize, rng: &mut R) {
    let len = pool.len();
    for k in 0..m {
        let j = rng.random_range(k..len);
        pool.swap(k, j);
    }
}

/// Sampler over a fixed population of block indices. The population array
/// is reused across draws; each draw is a partial Fisher-Yates shuffle.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    pool: Vec<usize>,
    m: usize,
}

impl BlockSampler {
    pub fn new(population: Vec<usize>, m: usize) -> Result<Self> {
        if m == 0 || m > population.len() {
            return Err(Error::invalid(format!(
                "need 1 <= m <= {} sampleable blocks, got m={m}",
                population.len()
            )));
        }
        Ok(BlockSampler { pool: population, m })
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[usize] {
        partial_shuffle(&mut self.pool, self.m, rng);
        &self.pool[..self.m]
    }

    pub fn population(&self) -> usize {
        self.pool.len()
    }
}

/// Step sizes used in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    /// Sampled block indices, in update order.
    pub sampled: Vec<usize>,
    /// `sigma[k]` belongs to `sampled[k]`.
    pub sigma: Vec<f64>,
    pub tau: f64,
    pub theta: f64,
    pub r_max: f64,
    pub m: usize,
    pub n: usize,
}
