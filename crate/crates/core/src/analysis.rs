//! Computational checks of the step-size theory, plus reference optima.
//!
//! * The coupling matrix `P = [[p I, -A_S], [-A_S^T, diag(v_i I)]]` must be
//!   positive semidefinite under the step-size rule; [`check_lemma1`] draws
//!   random instances and checks its smallest eigenvalue.
//! * The potential `Delta` contracts by `theta` per iteration when every block
//!   is updated (`m = n`); [`check_contraction`] runs the solver and tracks it
//!   against the closed-form ridge saddle point.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::blockmat::{dot, BlockMatrix};
use crate::error::{Error, Result};
use crate::losses::{LossKind, SaddleProblem};
use crate::solver::{
    compute_sigma, compute_tau, run, Solver, SolverConfig, SolverState, Variant,
};

/// Largest matrix side assembled densely by the checks.
pub const MAX_DENSE_DIM: usize = 500;
/// Largest primal dimension for the closed-form ridge solve.
pub const MAX_RIDGE_DIM: usize = 2000;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOLERANCE: f64 = -1e-10;
/// Slack allowed in `Delta(t+1) <= theta Delta(t)`.
pub const CONTRACTION_SLACK: f64 = 1e-10;

/// Per-block weights of the convergence potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialWeights {
    pub nu: Vec<f64>,
    pub nu_prime: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_prime: Vec<f64>,
}

impl PotentialWeights {
    pub fn new(sigmas: &[f64], gamma: f64, m: usize, n: usize) -> Result<Self> {
        if m == 0 || m > n || !(gamma > 0.0) {
            return Err(Error::invalid("need 1 <= m <= n and gamma > 0"));
        }
        if sigmas.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("dual steps must be positive"));
        }
        let (mf, nf) = (m as f64, n as f64);
        Ok(PotentialWeights {
            nu: sigmas.iter().map(|s| (0.25 / s + gamma) / mf).collect(),
            nu_prime: sigmas.iter().map(|s| (0.5 / s + gamma) / mf).collect(),
            mu: sigmas
                .iter()
                .map(|s| 0.5 / (mf * s) + (nf - mf) * gamma / (mf * nf))
                .collect(),
            mu_prime: sigmas.iter().map(|s| 0.5 / (mf * s) + gamma / mf).collect(),
        })
    }

    /// AdaSPDC weights: `sigma_i` from each block's norm.
    pub fn for_problem(problem: &SaddleProblem, a: &BlockMatrix, m: usize) -> Result<Self> {
        let n = a.num_blocks();
        let sigmas = a
            .spectral_norms()
            .into_iter()
            .map(|r| compute_sigma(r, n, m, problem.lambda, problem.gamma()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&sigmas, problem.gamma(), m, n)
    }
}

/// Symmetric `[[p I, -K], [-K^T, diag(v_j I_{q_j})]]` for the blocks of `k`.
pub fn coupling_matrix(primal_diag: f64, block_diag: &[f64], k: &BlockMatrix) -> Result<DMatrix<f64>> {
    Error::check_len("block diagonal", k.num_blocks(), block_diag.len())?;
    let d = k.rows();
    let q = k.total_cols();
    let dim = d + q;
    if dim > MAX_DENSE_DIM {
        return Err(Error::TooLarge {
            what: "coupling matrix side (desk-scale checks only)",
            size: dim,
            limit: MAX_DENSE_DIM,
        });
    }
    let mut p = DMatrix::zeros(dim, dim);
    for r in 0..d {
        p[(r, r)] = primal_diag;
    }
    for (i, &v) in block_diag.iter().enumerate() {
        for c in k.block_range(i) {
            p[(d + c, d + c)] = v;
            for (r, val) in k.column_entries(c) {
                p[(r, d + c)] = -val;
                p[(d + c, r)] = -val;
            }
        }
    }
    Ok(p)
}

/// `P = [[m/(2 tau) I, -A_S], [-A_S^T, diag(1/(2 sigma_i) I)]]` where `a_s`
/// holds the sampled blocks and `sigmas` their dual steps.
pub fn build_p(tau: f64, sigmas: &[f64], a_s: &BlockMatrix, m: usize) -> Result<DMatrix<f64>> {
    if !(tau > 0.0) || sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::invalid("step sizes must be positive"));
    }
    let diag: Vec<f64> = sigmas.iter().map(|s| 0.5 / s).collect();
    coupling_matrix(m as f64 / (2.0 * tau), &diag, a_s)
}

pub fn min_eigenvalue(p: &DMatrix<f64>) -> f64 {
    p.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub rule: String,
    pub min_eigenvalue: f64,
    /// Row-major matrix entries.
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleReport {
    pub rule: String,
    pub trials: usize,
    pub violations: usize,
    /// Smallest eigenvalue seen over all trials.
    pub worst_min_eigenvalue: f64,
    pub counterexamples: Vec<Counterexample>,
}

impl RuleReport {
    fn new(rule: &str) -> Self {
        RuleReport {
            rule: rule.to_string(),
            trials: 0,
            violations: 0,
            worst_min_eigenvalue: f64::INFINITY,
            counterexamples: Vec::new(),
        }
    }

    fn record(&mut self, trial: usize, p: &DMatrix<f64>) {
        let lam = min_eigenvalue(p);
        self.trials += 1;
        self.worst_min_eigenvalue = self.worst_min_eigenvalue.min(lam);
        if !(lam > PSD_TOLERANCE) {
            self.violations += 1;
            self.counterexamples.push(Counterexample {
                trial,
                rule: self.rule.clone(),
                min_eigenvalue: lam,
                matrix: (0..p.nrows())
                    .map(|r| (0..p.ncols()).map(|c| p[(r, c)]).collect())
                    .collect(),
            });
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    /// `u = 1/(c J R_max)`, `v_j = c / R_j`.
    pub general: RuleReport,
    /// The solver's `tau`, `sigma_i` with `m = J` sampled blocks.
    pub solver: RuleReport,
}

impl LemmaReport {
    pub fn violations(&self) -> usize {
        self.general.violations + self.solver.violations
    }
}

/// Random block matrix with `d <= 20` rows, `J <= 10` non-zero blocks of
/// width `<= 3` and roughly half of the entries non-zero.
pub fn random_block_matrix<R: Rng + ?Sized>(rng: &mut R) -> BlockMatrix {
    let d = rng.random_range(1..=20);
    let blocks = rng.random_range(1..=10);
    let widths: Vec<usize> = (0..blocks).map(|_| rng.random_range(1..=3)).collect();
    let mut columns = Vec::new();
    for &w in &widths {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = (0..w)
                .map(|_| {
                    (0..d)
                        .filter_map(|r| {
                            if rng.random_bool(0.5) {
                                Some((r, rng.random_range(-2.0..2.0)))
                            } else {
                                None
                            }
                        })
                        .collect()
                })
                .collect();
            if cols.iter().any(|c| !c.is_empty()) {
                columns.extend(cols);
                break;
            }
        }
    }
    BlockMatrix::from_columns(d, columns, &widths).expect("valid random blocks")
}

/// Checks positive semidefiniteness of the coupling matrix on `trials`
/// random instances under both the general rule (random `c in [0.1, 10]`)
/// and the solver's rule (random `n >= J`, `lambda`, `gamma`).
/// `corrupt_primal` halves the primal diagonal (doubles `u`), which must
/// produce violations.
pub fn check_lemma1<R: Rng + ?Sized>(trials: usize, rng: &mut R, corrupt_primal: bool) -> Result<LemmaReport> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let scale = if corrupt_primal { 0.5 } else { 1.0 };
    let mut general = RuleReport::new("general");
    let mut solver = RuleReport::new("solver");
    for trial in 0..trials {
        let k = random_block_matrix(rng);
        let j = k.num_blocks();
        let norms = k.spectral_norms();
        let r_max = norms.iter().copied().fold(0.0, f64::max);

        let c = rng.random_range(0.1..10.0);
        let v_inv: Vec<f64> = norms.iter().map(|r| r / c).collect();
        let u_inv = c * j as f64 * r_max;
        general.record(trial, &coupling_matrix(scale * u_inv, &v_inv, &k)?);

        let n = j + rng.random_range(0..50);
        let lambda = 10f64.powf(rng.random_range(-6.0..0.0));
        let gamma = if rng.random_bool(0.5) { 1.0 } else { 4.0 };
        let tau = compute_tau(r_max, n, j, lambda, gamma)?;
        let sigmas = norms
            .iter()
            .map(|&r| compute_sigma(r, n, j, lambda, gamma))
            .collect::<Result<Vec<_>>>()?;
        let p = build_p(tau / scale, &sigmas, &k, j)?;
        solver.record(trial, &p);
    }
    Ok(LemmaReport { general, solver })
}

/// Saddle point of a problem together with its primal objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddlePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
}

/// Closed-form ridge optimum `x* = (A A^T + n lambda I)^{-1} A b` and the
/// matching dual point `y* = A^T x* - b`.
pub fn ridge_exact_solution(a: &BlockMatrix, labels: &[f64], lambda: f64) -> Result<SaddlePoint> {
    let d = a.rows();
    if d > MAX_RIDGE_DIM {
        return Err(Error::TooLarge {
            what: "ridge primal dimension",
            size: d,
            limit: MAX_RIDGE_DIM,
        });
    }
    Error::check_len("ridge labels", a.total_cols(), labels.len())?;
    let problem = SaddleProblem::new(LossKind::Quadratic, labels.to_vec(), lambda)?;
    let n = a.num_blocks() as f64;
    let dense = DMatrix::from_column_slice(d, a.total_cols(), &a.to_dense());
    let mut gram = &dense * dense.transpose();
    for r in 0..d {
        gram[(r, r)] += n * lambda;
    }
    let rhs = &dense * DVector::from_column_slice(labels);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("ridge normal matrix is not positive definite".into()))?;
    let x: Vec<f64> = chol.solve(&rhs).iter().copied().collect();
    let y: Vec<f64> = a
        .rmatvec(&x)?
        .into_iter()
        .zip(labels)
        .map(|(z, b)| z - b)
        .collect();
    let objective = problem.primal_objective(a, &x)?;
    Ok(SaddlePoint { x, y, objective })
}

/// `||(A A^T + n lambda I) x - A b||`, the normal-equation residual.
pub fn ridge_residual(a: &BlockMatrix, labels: &[f64], lambda: f64, x: &[f64]) -> Result<f64> {
    let n = a.num_blocks() as f64;
    let atx = a.rmatvec(x)?;
    let aatx = a.matvec(&atx)?;
    let ab = a.matvec(labels)?;
    Ok(aatx
        .iter()
        .zip(x)
        .zip(&ab)
        .map(|((u, xi), v)| {
            let e = u + n * lambda * xi - v;
            e * e
        })
        .sum::<f64>()
        .sqrt())
}

/// `J(x) - J_ref`. May be slightly negative when the reference is itself an
/// approximation; reports clamp at zero.
pub fn suboptimality(problem: &SaddleProblem, a: &BlockMatrix, x: &[f64], reference_objective: f64) -> Result<f64> {
    if !reference_objective.is_finite() {
        return Err(Error::invalid("reference objective must be finite"));
    }
    Ok(problem.primal_objective(a, x)? - reference_objective)
}

/// Reference optimum for losses without a closed form: the lowest objective
/// seen along an AdaSPDC run ten times longer than `passes`.
pub fn approximate_optimum(problem: &SaddleProblem, a: &BlockMatrix, m: usize, passes: f64, seed: u64) -> Result<f64> {
    let config = SolverConfig {
        variant: Variant::AdaSpdc,
        m,
        max_passes: 10.0 * passes,
        seed,
        trace_stride: 1.0,
        newton_iters: 20,
        ..Default::default()
    };
    let out = run(problem, a, &config, None)?;
    Ok(out
        .trace
        .iter()
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min))
}

/// The convergence potential
/// `(1/(2 tau) + lambda)||x - x*||^2 + ||y - y*||^2_{mu'}
///  + (1/(4 tau))||x - x_prev||^2 + (1/n)<x - x_prev, A (y - y*)>`.
pub fn compute_delta(
    state: &SolverState,
    reference: &SaddlePoint,
    tau: f64,
    lambda: f64,
    weights: &PotentialWeights,
    a: &BlockMatrix,
) -> Result<f64> {
    Error::check_len("reference x", state.x.len(), reference.x.len())?;
    Error::check_len("reference y", state.y.len(), reference.y.len())?;
    Error::check_len("potential weights", a.num_blocks(), weights.mu_prime.len())?;
    let n = a.num_blocks() as f64;
    let dx: Vec<f64> = state.x.iter().zip(&reference.x).map(|(u, v)| u - v).collect();
    let dy: Vec<f64> = state.y.iter().zip(&reference.y).map(|(u, v)| u - v).collect();
    let step: Vec<f64> = state.x.iter().zip(&state.x_prev).map(|(u, v)| u - v).collect();

    let primal = (0.5 / tau + lambda) * dot(&dx, &dx);
    let dual: f64 = (0..a.num_blocks())
        .map(|i| {
            let r = a.block_range(i);
            weights.mu_prime[i] * dot(&dy[r.clone()], &dy[r])
        })
        .sum();
    let momentum = 0.25 / tau * dot(&step, &step);
    let cross = if step.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        dot(&step, &a.matvec(&dy)?) / n
    };
    Ok(primal + dual + momentum + cross)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionViolation {
    pub iteration: usize,
    pub delta_before: f64,
    pub delta_after: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// `Delta(0), ..., Delta(T)`.
    pub deltas: Vec<f64>,
    /// `theta(0), ..., theta(T-1)`.
    pub thetas: Vec<f64>,
    pub violations: Vec<ContractionViolation>,
    /// Largest `Delta(t+1) - factor * Delta(t)`.
    pub max_excess: f64,
}

impl ContractionReport {
    pub fn violation_count(&self) -> usize {
        self.violations.len()
    }
}

/// Runs full-batch AdaSPDC (`m = n`) on a ridge problem and checks
/// `Delta(t+1) <= theta(t) Delta(t) + 1e-10` at every step. With
/// `corrupt_theta` the comparison factor is halved, which must fail.
pub fn check_contraction(
    problem: &SaddleProblem,
    a: &BlockMatrix,
    iterations: usize,
    corrupt_theta: bool,
) -> Result<ContractionReport> {
    if problem.loss != LossKind::Quadratic {
        return Err(Error::invalid("contraction check needs the closed-form ridge saddle point"));
    }
    let n = a.num_blocks();
    if a.spectral_norms().contains(&0.0) {
        return Err(Error::invalid("contraction check needs every block non-zero"));
    }
    let reference = ridge_exact_solution(a, &problem.labels, problem.lambda)?;
    let weights = PotentialWeights::for_problem(problem, a, n)?;
    let config = SolverConfig {
        variant: Variant::AdaSpdc,
        m: n,
        ..Default::default()
    };
    let mut solver = Solver::new(problem, a, config)?;
    let mut state = SolverState::zeros(a);
    let all: Vec<usize> = (0..n).collect();

    let tau0 = compute_tau(
        a.spectral_norms().into_iter().fold(0.0, f64::max),
        n,
        n,
        problem.lambda,
        problem.gamma(),
    )?;
    let mut deltas = vec![compute_delta(&state, &reference, tau0, problem.lambda, &weights, a)?];
    let mut thetas = Vec::with_capacity(iterations);
    let mut violations = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    for t in 0..iterations {
        let schedule = solver.step_blocks(&mut state, &all)?;
        let delta = compute_delta(&state, &reference, schedule.tau, problem.lambda, &weights, a)?;
        let factor = if corrupt_theta { 0.5 * schedule.theta } else { schedule.theta };
        let before = deltas[t];
        let excess = delta - factor * before;
        max_excess = max_excess.max(excess);
        if excess > CONTRACTION_SLACK {
            violations.push(ContractionViolation {
                iteration: t,
                delta_before: before,
                delta_after: delta,
                factor,
            });
        }
        thetas.push(schedule.theta);
        deltas.push(delta);
    }
    Ok(ContractionReport {
        deltas,
        thetas,
        violations,
        max_excess,
    })
}

/// Both sides of the final convergence bound for a stochastic run, using the
/// realized last-iteration `tau` for the primal weight.
#[derive(Debug, Clone, Serialize)]
pub struct BoundDiagnostic {
    pub lhs: f64,
    pub rhs: f64,
    pub theta_product: f64,
}

/// Averages the left side of the final bound over `seeds` runs of
/// `iterations` AdaSPDC steps with `m` sampled blocks. A diagnostic for
/// `m < n`, where the bound holds only in expectation.
pub fn expected_bound_diagnostic(
    problem: &SaddleProblem,
    a: &BlockMatrix,
    m: usize,
    iterations: usize,
    seeds: u64,
) -> Result<BoundDiagnostic> {
    if seeds == 0 || iterations == 0 {
        return Err(Error::invalid("need at least one seed and one iteration"));
    }
    let reference = ridge_exact_solution(a, &problem.labels, problem.lambda)?;
    let weights = PotentialWeights::for_problem(problem, a, m)?;
    let weighted = |y: &[f64], w: &[f64]| -> f64 {
        (0..a.num_blocks())
            .map(|i| {
                let r = a.block_range(i);
                let dy: Vec<f64> = y[r.clone()].iter().zip(&reference.y[r]).map(|(u, v)| u - v).collect();
                w[i] * dot(&dy, &dy)
            })
            .sum()
    };
    let x0_dist: f64 = reference.x.iter().map(|v| v * v).sum();
    let y0_nu_prime = weighted(&vec![0.0; a.total_cols()], &weights.nu_prime);
    let (mut lhs, mut rhs, mut prod_sum) = (0.0, 0.0, 0.0);
    for seed in 0..seeds {
        let config = SolverConfig {
            variant: Variant::AdaSpdc,
            m,
            seed,
            ..Default::default()
        };
        let mut solver = Solver::new(problem, a, config)?;
        let mut state = SolverState::zeros(a);
        let mut prod = 1.0;
        let mut tau = 0.0;
        for _ in 0..iterations {
            let s = solver.step(&mut state)?;
            prod *= s.theta;
            tau = s.tau;
        }
        let pw = 0.5 / tau + problem.lambda;
        let dx: f64 = state.x.iter().zip(&reference.x).map(|(u, v)| (u - v) * (u - v)).sum();
        lhs += pw * dx + weighted(&state.y, &weights.nu);
        rhs += prod * (pw * x0_dist + y0_nu_prime);
        prod_sum += prod;
    }
    let s = seeds as f64;
    Ok(BoundDiagnostic {
        lhs: lhs / s,
        rhs: rhs / s,
        theta_product: prod_sum / s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_coupling_is_diagonal() {
        let k = BlockMatrix::from_columns(2, vec![vec![], vec![]], &[1, 1]).unwrap();
        let p = build_p(0.5, &[0.25, 1.0], &k, 2).unwrap();
        assert_eq!(min_eigenvalue(&p), 0.5f64.min(2.0));
        assert!((min_eigenvalue(&p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_block_sits_on_the_psd_boundary() {
        // n = m = 1, lambda = gamma = 1, a = (1): sigma = tau = 1/2, so
        // P = [[1, -1], [-1, 1]] with eigenvalues 0 and 2.
        let k = BlockMatrix::from_dense(1, &[1.0], &[1]).unwrap();
        let sigma = compute_sigma(1.0, 1, 1, 1.0, 1.0).unwrap();
        let tau = compute_tau(1.0, 1, 1, 1.0, 1.0).unwrap();
        assert_eq!((sigma, tau), (0.5, 0.5));
        let p = build_p(tau, &[sigma], &k, 1).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let mut eig: Vec<f64> = p.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!(eig[0].abs() < 1e-15 && (eig[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn p_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = random_block_matrix(&mut rng);
        let sig: Vec<f64> = (0..k.num_blocks()).map(|i| 0.1 + i as f64).collect();
        let p = build_p(0.3, &sig, &k, k.num_blocks()).unwrap();
        assert_eq!(p, p.transpose());
    }

    #[test]
    fn oversized_p_is_rejected() {
        let k = BlockMatrix::from_columns(400, vec![vec![]; 200], &vec![1; 200]).unwrap();
        assert!(matches!(
            build_p(1.0, &vec![1.0; 200], &k, 200),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn psd_check_holds_and_corruption_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = check_lemma1(100, &mut rng, false).unwrap();
        assert_eq!(report.violations(), 0, "{:?}", report.general.worst_min_eigenvalue);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bad = check_lemma1(100, &mut rng, true).unwrap();
        assert!(bad.general.violations > 0 && bad.solver.violations > 0);
        assert!(!bad.general.counterexamples[0].matrix.is_empty());
    }

    #[test]
    fn weights_are_ordered() {
        let w = PotentialWeights::new(&[0.1, 2.0, 50.0], 4.0, 2, 7).unwrap();
        for i in 0..3 {
            assert!(w.nu[i] > 0.0 && w.mu[i] > 0.0);
            assert!(w.nu[i] < w.nu_prime[i]);
            assert!(w.mu[i] < w.mu_prime[i]);
        }
        let full = PotentialWeights::new(&[1.0], 1.0, 3, 3).unwrap();
        assert!(full.mu[0] < full.mu_prime[0]);
    }

    #[test]
    fn ridge_scalar_example() {
        let a = BlockMatrix::from_dense(1, &[2.0], &[1]).unwrap();
        let s = ridge_exact_solution(&a, &[4.0], 1.0).unwrap();
        assert!((s.x[0] - 1.6).abs() < 1e-15);
        assert!((s.y[0] - (2.0 * 1.6 - 4.0)).abs() < 1e-15);
    }

    #[test]
    fn ridge_identity_example() {
        let n = 4;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let a = BlockMatrix::from_dense(n, &data, &vec![1; n]).unwrap();
        let b = [1.0, -2.0, 3.0, 0.5];
        let s = ridge_exact_solution(&a, &b, 0.3).unwrap();
        for (xi, bi) in s.x.iter().zip(b) {
            assert!((xi - bi / (1.0 + n as f64 * 0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn ridge_random_residual() {
        let ds = crate::data::generate_synthetic(20, 20, 2).unwrap();
        let s = ridge_exact_solution(&ds.matrix, &ds.labels, 1e-2).unwrap();
        let res = ridge_residual(&ds.matrix, &ds.labels, 1e-2, &s.x).unwrap();
        let scale = crate::blockmat::l2(&ds.matrix.matvec(&ds.labels).unwrap());
        assert!(res < 1e-10 * scale.max(1.0), "{res}");
    }

    #[test]
    fn suboptimality_examples() {
        let ds = crate::data::generate_synthetic(10, 4, 3).unwrap();
        let lambda = 1e-2;
        let p = SaddleProblem::new(LossKind::Quadratic, ds.labels.clone(), lambda).unwrap();
        let s = ridge_exact_solution(&ds.matrix, &ds.labels, lambda).unwrap();
        assert!(suboptimality(&p, &ds.matrix, &s.x, s.objective).unwrap().abs() < 1e-10);
        let at_zero = suboptimality(&p, &ds.matrix, &[0.0; 4], s.objective).unwrap();
        let half_b2: f64 = ds.labels.iter().map(|b| 0.5 * b * b).sum::<f64>() / 10.0;
        assert!((at_zero - (half_b2 - s.objective)).abs() < 1e-12);
        assert!(at_zero > 0.0);
        assert!(suboptimality(&p, &ds.matrix, &[0.0; 4], f64::NAN).is_err());
    }

    #[test]
    fn delta_vanishes_at_saddle() {
        let ds = crate::data::generate_synthetic(5, 3, 4).unwrap();
        let p = SaddleProblem::new(LossKind::Quadratic, ds.labels.clone(), 0.1).unwrap();
        let s = ridge_exact_solution(&ds.matrix, &ds.labels, 0.1).unwrap();
        let state = SolverState::from_point(&ds.matrix, s.x.clone(), s.y.clone()).unwrap();
        let w = PotentialWeights::for_problem(&p, &ds.matrix, 5).unwrap();
        assert_eq!(compute_delta(&state, &s, 0.7, 0.1, &w, &ds.matrix).unwrap(), 0.0);

        let mut x = s.x.clone();
        x[0] += 0.5;
        let state = SolverState::from_point(&ds.matrix, x, s.y.clone()).unwrap();
        let got = compute_delta(&state, &s, 0.7, 0.1, &w, &ds.matrix).unwrap();
        assert!((got - (0.5 / 0.7 + 0.1) * 0.25).abs() < 1e-15);
    }

    #[test]
    fn scalar_contraction_is_observable() {
        let a = BlockMatrix::from_dense(1, &[1.5], &[1]).unwrap();
        let p = SaddleProblem::new(LossKind::Quadratic, vec![2.0], 0.5).unwrap();
        let report = check_contraction(&p, &a, 40, false).unwrap();
        assert_eq!(report.violation_count(), 0);
        for t in 0..10 {
            let ratio = report.deltas[t + 1] / report.deltas[t];
            assert!(ratio <= report.thetas[t] + 1e-12, "t={t}: {ratio}");
            assert!(ratio > 0.0);
        }
    }

    #[test]
    fn contraction_rejects_non_ridge() {
        let a = BlockMatrix::from_dense(1, &[1.0], &[1]).unwrap();
        let p = SaddleProblem::new(LossKind::Logistic, vec![1.0], 0.5).unwrap();
        assert!(check_contraction(&p, &a, 5, false).is_err());
    }
}
