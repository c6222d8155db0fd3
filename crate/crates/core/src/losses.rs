//! Loss families, their convex conjugates and the proximal steps used by the
//! primal-dual solvers.
//!
//! Every family is expressed through its conjugate `phi*(y; b)`, which is
//! `gamma`-strongly convex on its domain. The dual step minimizes
//! `phi*(y) - inner * y + (y - y_prev)^2 / (2 sigma)` for one scalar dual
//! coordinate; the primal step is the proximal map of `(lambda/2)||x||^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};

/// Smoothing parameter of the smooth hinge loss. Fixed, not tunable.
pub const SMOOTH_HINGE_SMOOTHING: f64 = 1.0;

/// Logistic Newton iterates are kept this far inside `b*y in (-1, 0)`.
const LOGISTIC_MARGIN: f64 = 1e-12;
/// Gradient tolerance for the logistic dual step.
pub const LOGISTIC_GRAD_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_ITERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Squared loss `0.5 (z - b)^2`, i.e. ridge regression.
    #[serde(alias = "ridge")]
    Quadratic,
    SmoothHinge,
    Logistic,
}

impl LossKind {
    /// Strong-convexity modulus of the conjugate.
    pub fn gamma(self) -> f64 {
        match self {
            LossKind::Quadratic => 1.0,
            LossKind::SmoothHinge => SMOOTH_HINGE_SMOOTHING,
            LossKind::Logistic => 4.0,
        }
    }

    pub fn is_classification(self) -> bool {
        !matches!(self, LossKind::Quadratic)
    }

    /// Primal loss `phi(z; b)`.
    pub fn primal(self, z: f64, b: f64) -> f64 {
        match self {
            LossKind::Quadratic => 0.5 * (z - b) * (z - b),
            LossKind::SmoothHinge => {
                let g = SMOOTH_HINGE_SMOOTHING;
                let w = b * z;
                if w >= 1.0 {
                    0.0
                } else if w <= 1.0 - g {
                    1.0 - g / 2.0 - w
                } else {
                    (1.0 - w) * (1.0 - w) / (2.0 * g)
                }
            }
            LossKind::Logistic => {
                let w = b * z;
                if w > 0.0 {
                    (-w).exp().ln_1p()
                } else {
                    -w + w.exp().ln_1p()
                }
            }
        }
    }

    /// Conjugate `phi*(y; b)`; `+inf` outside its domain.
    pub fn conjugate(self, y: f64, b: f64) -> f64 {
        match self {
            LossKind::Quadratic => 0.5 * y * y + b * y,
            LossKind::SmoothHinge => {
                let s = b * y;
                if (-1.0..=0.0).contains(&s) {
                    s + 0.5 * SMOOTH_HINGE_SMOOTHING * y * y
                } else {
                    f64::INFINITY
                }
            }
            LossKind::Logistic => {
                let s = b * y;
                if (-1.0..=0.0).contains(&s) {
                    xlogx(-s) + xlogx(1.0 + s)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Closed interval containing the conjugate's domain, if bounded.
    pub fn dual_domain(self, b: f64) -> Option<(f64, f64)> {
        match self {
            LossKind::Quadratic => None,
            _ if b > 0.0 => Some((-1.0, 0.0)),
            _ => Some((0.0, 1.0)),
        }
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Quadratic => "ridge",
            LossKind::SmoothHinge => "smooth-hinge",
            LossKind::Logistic => "logistic",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" | "quadratic" => Ok(LossKind::Quadratic),
            "smooth-hinge" | "smooth_hinge" | "hinge" => Ok(LossKind::SmoothHinge),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::invalid(format!("unknown loss '{other}'"))),
        }
    }
}

/// Sign of the label term in the closed-form quadratic dual step.
///
/// `Derived` is the stationarity solution of the dual subproblem for
/// `phi*(y) = y^2/2 + b y`. `Displayed` adds `b` instead of subtracting it,
/// which reproduces the printed update from the original ridge experiment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadraticSign {
    #[default]
    Derived,
    Displayed,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("dual step size must be positive, got {sigma}")))
    }
}

fn check_binary_label(b: f64) -> Result<()> {
    if b == 1.0 || b == -1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("classification label must be +1 or -1, got {b}")))
    }
}

/// Dual step for the squared loss.
pub fn dual_prox_quadratic(inner: f64, b: f64, y_prev: f64, sigma: f64) -> Result<f64> {
    dual_prox_quadratic_signed(inner, b, y_prev, sigma, QuadraticSign::Derived)
}

pub fn dual_prox_quadratic_signed(
    inner: f64,
    b: f64,
    y_prev: f64,
    sigma: f64,
    sign: QuadraticSign,
) -> Result<f64> {
    check_sigma(sigma)?;
    let label = match sign {
        QuadraticSign::Derived => -b,
        QuadraticSign::Displayed => b,
    };
    let inv = 1.0 / sigma;
    Ok((inner + label + y_prev * inv) / (1.0 + inv))
}

/// Dual step for the smooth hinge loss: the quadratic step projected onto
/// `b*y in [-1, 0]`.
pub fn dual_prox_smooth_hinge(inner: f64, b: f64, y_prev: f64, sigma: f64) -> Result<f64> {
    check_binary_label(b)?;
    let free = dual_prox_quadratic(inner, b, y_prev, sigma)?;
    Ok(project_hinge_domain(free, b))
}

#[inline]
fn project_hinge_domain(y: f64, b: f64) -> f64 {
    if b > 0.0 {
        y.clamp(-1.0, 0.0)
    } else {
        y.clamp(0.0, 1.0)
    }
}

/// Result of the safeguarded Newton solve for the logistic dual step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticProx {
    pub y: f64,
    /// Subproblem derivative at the final Newton iterate, before clamping.
    pub gradient: f64,
    pub steps: usize,
    /// `|gradient| < LOGISTIC_GRAD_TOL` was reached.
    pub converged: bool,
}

/// Dual step for the logistic loss.
///
/// With `s = b*y` the subproblem derivative is
/// `h = ln((1+s)/(-s)) - b*inner + (s - b*y_prev)/sigma`. Newton runs on the
/// logit `u = ln((1+s)/(-s))`, where `h(u)` is increasing with slope in
/// `[1, 1 + 1/(4 sigma)]` and the root lies in
/// `[b*inner + c/sigma, b*inner + (1+c)/sigma]` for `c = b*y_prev`. Steps that
/// leave the current sign bracket fall back to bisection. The start is the
/// logit of `c` when `c` is interior, else `u = 0` (`s = -1/2`). The returned
/// `s` is clamped to `[-1 + 1e-12, -1e-12]`.
///
/// `sigma` may be `+inf`, which drops the proximal term.
pub fn dual_prox_logistic(
    inner: f64,
    b: f64,
    y_prev: f64,
    sigma: f64,
    newton_iters: usize,
) -> Result<LogisticProx> {
    check_binary_label(b)?;
    check_sigma(sigma)?;
    if !inner.is_finite() || !y_prev.is_finite() {
        return Err(Error::invalid("logistic dual step needs finite inputs"));
    }
    let inv_sigma = 1.0 / sigma;
    let target = b * inner;
    let centre = b * y_prev;
    // s(u) = -1/(1 + e^u), evaluated without overflow
    let s_of = |u: f64| {
        if u > 0.0 {
            let e = (-u).exp();
            -e / (1.0 + e)
        } else {
            -1.0 / (1.0 + u.exp())
        }
    };
    let h = |u: f64| u - target + (s_of(u) - centre) * inv_sigma;
    let dh = |u: f64| {
        let s = s_of(u);
        1.0 + inv_sigma * (-s) * (1.0 + s)
    };

    let (mut lo, mut hi) = (target + centre * inv_sigma, target + (1.0 + centre) * inv_sigma);
    let mut u = if centre > -1.0 && centre < 0.0 {
        ((1.0 + centre) / -centre).ln()
    } else {
        0.0
    };
    u = u.clamp(lo, hi);
    let mut hv = h(u);
    let mut steps = 0;
    while steps < newton_iters && hv.abs() >= LOGISTIC_GRAD_TOL {
        if hv > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = u - hv / dh(u);
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if next == u {
            break;
        }
        u = next;
        hv = h(u);
        steps += 1;
    }
    let s = s_of(u).clamp(-1.0 + LOGISTIC_MARGIN, -LOGISTIC_MARGIN);
    Ok(LogisticProx {
        y: b * s,
        gradient: b * hv,
        steps,
        converged: hv.abs() < LOGISTIC_GRAD_TOL,
    })
}

/// Proximal map of `g(x) = (lambda/2)||x||^2` with linear term `u`:
/// `argmin_x g(x) + <x, u> + ||x - x_prev||^2 / (2 tau)`.
pub fn primal_prox_l2(x_prev: &[f64], u: &[f64], tau: f64, lambda: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x_prev.len()];
    primal_prox_l2_into(x_prev, u, tau, lambda, &mut out)?;
    Ok(out)
}

pub fn primal_prox_l2_into(
    x_prev: &[f64],
    u: &[f64],
    tau: f64,
    lambda: f64,
    out: &mut [f64],
) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("primal step size must be positive, got {tau}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    Error::check_len("primal prox linear term", x_prev.len(), u.len())?;
    Error::check_len("primal prox output", x_prev.len(), out.len())?;
    let inv_tau = 1.0 / tau;
    let scale = 1.0 / (lambda + inv_tau);
    for ((o, &xp), &ui) in out.iter_mut().zip(x_prev).zip(u) {
        *o = (xp * inv_tau - ui) * scale;
    }
    Ok(())
}

/// A regularized loss problem in saddle form: `g(x) = (lambda/2)||x||^2`
/// plus one conjugate term per dual coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleProblem {
    pub loss: LossKind,
    /// One label per dual coordinate.
    pub labels: Vec<f64>,
    pub lambda: f64,
    pub quadratic_sign: QuadraticSign,
}

impl SaddleProblem {
    pub fn new(loss: LossKind, labels: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        if labels.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("labels must be finite"));
        }
        if loss.is_classification() {
            if let Some(bad) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
                return Err(Error::invalid(format!(
                    "{loss} needs labels in {{-1, +1}}, found {bad}"
                )));
            }
        }
        Ok(SaddleProblem {
            loss,
            labels,
            lambda,
            quadratic_sign: QuadraticSign::Derived,
        })
    }

    pub fn with_quadratic_sign(mut self, sign: QuadraticSign) -> Self {
        self.quadratic_sign = sign;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.loss.gamma()
    }

    pub fn check_matrix(&self, a: &BlockMatrix) -> Result<()> {
        Error::check_len("labels vs matrix columns", a.total_cols(), self.labels.len())
    }

    /// Dual step for coordinate `k`. Returns the new value and whether the
    /// inner solve (logistic only) met its tolerance.
    pub fn dual_prox(
        &self,
        k: usize,
        inner: f64,
        y_prev: f64,
        sigma: f64,
        newton_iters: usize,
    ) -> Result<(f64, bool)> {
        let b = self.labels[k];
        match self.loss {
            LossKind::Quadratic => {
                dual_prox_quadratic_signed(inner, b, y_prev, sigma, self.quadratic_sign)
                    .map(|y| (y, true))
            }
            LossKind::SmoothHinge => dual_prox_smooth_hinge(inner, b, y_prev, sigma).map(|y| (y, true)),
            LossKind::Logistic => {
                dual_prox_logistic(inner, b, y_prev, sigma, newton_iters).map(|p| (p.y, p.converged))
            }
        }
    }

    /// `J(x) = (1/n) sum_i phi_i(A_i^T x) + (lambda/2)||x||^2`, `n` the
    /// number of blocks.
    pub fn primal_objective(&self, a: &BlockMatrix, x: &[f64]) -> Result<f64> {
        self.check_matrix(a)?;
        Error::check_len("primal objective x", a.rows(), x.len())?;
        let z = a.rmatvec(x)?;
        let loss: f64 = z
            .iter()
            .zip(&self.labels)
            .map(|(&zi, &bi)| self.loss.primal(zi, bi))
            .sum();
        let reg: f64 = 0.5 * self.lambda * x.iter().map(|v| v * v).sum::<f64>();
        Ok(loss / a.num_blocks() as f64 + reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Golden-section minimization of a unimodal scalar function on `[a, b]`.
    fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        for _ in 0..200 {
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - r * (b - a);
            d = a + r * (b - a);
        }
        0.5 * (a + b)
    }

    #[test]
    fn quadratic_prox_examples() {
        assert_eq!(dual_prox_quadratic(0.0, 0.0, 2.0, 1.0).unwrap(), 1.0);
        assert_eq!(dual_prox_quadratic(3.0, 1.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(dual_prox_quadratic(0.0, 0.0, 0.0, 10.0).unwrap(), 0.0);
        assert!(dual_prox_quadratic(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(dual_prox_quadratic(0.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn quadratic_prox_matches_golden_section() {
        let (inner, b, y_prev, sigma) = (3.0, 1.0, 0.0, 1.0);
        let f = |y: f64| LossKind::Quadratic.conjugate(y, b) - inner * y + (y - y_prev).powi(2) / (2.0 * sigma);
        let oracle = golden_min(f, -10.0, 10.0);
        assert!((dual_prox_quadratic(inner, b, y_prev, sigma).unwrap() - oracle).abs() < 1e-6);
    }

    #[test]
    fn displayed_sign_flips_label_term() {
        let y = dual_prox_quadratic_signed(3.0, 1.0, 0.0, 1.0, QuadraticSign::Displayed).unwrap();
        assert_eq!(y, 2.0);
    }

    #[test]
    fn smooth_hinge_projection() {
        // unconstrained (inner - b + y_prev/sigma)/(1 + 1/sigma) = 0.7
        assert_eq!(dual_prox_smooth_hinge(2.4, 1.0, 0.0, 1.0).unwrap(), 0.0);
        // unconstrained -0.3
        assert!((dual_prox_smooth_hinge(0.4, 1.0, 0.0, 1.0).unwrap() + 0.3).abs() < 1e-15);
        assert_eq!(dual_prox_smooth_hinge(-5.0, 1.0, 0.0, 1.0).unwrap(), -1.0);
        // negative label lands in [0, 1]
        assert_eq!(dual_prox_smooth_hinge(5.0, -1.0, 0.0, 1.0).unwrap(), 1.0);
        assert!(dual_prox_smooth_hinge(0.0, 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn smooth_hinge_clamp_matches_grid() {
        let f = |y: f64| LossKind::SmoothHinge.conjugate(y, 1.0) + 5.0 * y + y * y / 2.0;
        let best = (0..=1000)
            .map(|k| -1.0 + k as f64 / 1000.0)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        assert_eq!(best, -1.0);
    }

    #[test]
    fn logistic_prox_examples() {
        let p = dual_prox_logistic(0.0, 1.0, -0.2, f64::INFINITY, 50).unwrap();
        assert!(p.converged);
        assert!((p.y + 0.5).abs() < 1e-12);
        let p = dual_prox_logistic(0.0, 1.0, -0.5, 1.0, 5).unwrap();
        assert!(p.converged);
        assert!((p.y + 0.5).abs() < 1e-14);
        assert_eq!(p.steps, 0);
        // cold start from a boundary centre
        let p = dual_prox_logistic(1.0, -1.0, 0.0, 1.0, 50).unwrap();
        assert!(p.converged);
        assert!(p.y > 0.0 && p.y < 1.0);
    }

    #[test]
    fn logistic_prox_flags_unconverged() {
        let p = dual_prox_logistic(9.0, 1.0, -0.999, 100.0, 0).unwrap();
        assert!(!p.converged);
        assert!(p.gradient.abs() >= LOGISTIC_GRAD_TOL);
        assert!(p.y > -1.0 && p.y < 0.0);
    }

    #[test]
    fn primal_prox_examples() {
        assert_eq!(primal_prox_l2(&[0.0, 0.0], &[0.0, 0.0], 1.0, 1.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(primal_prox_l2(&[0.0, 0.0], &[1.0, 0.0], 1.0, 1.0).unwrap(), vec![-0.5, 0.0]);
        assert_eq!(primal_prox_l2(&[2.0], &[0.0], 1.0, 1.0).unwrap(), vec![1.0]);
        assert!(primal_prox_l2(&[0.0], &[0.0], 0.0, 1.0).is_err());
        assert!(primal_prox_l2(&[0.0], &[0.0], 1.0, -1.0).is_err());
        assert!(primal_prox_l2(&[0.0], &[0.0, 1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn primal_prox_matches_grid_search() {
        let f = |x: f64, y: f64| 0.5 * (x * x + y * y) + x + 0.5 * (x * x + y * y);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for j in 0..=400 {
                let (x, y) = (-1.0 + i as f64 / 200.0, -1.0 + j as f64 / 200.0);
                if f(x, y) < best.0 {
                    best = (f(x, y), x, y);
                }
            }
        }
        let got = primal_prox_l2(&[0.0, 0.0], &[1.0, 0.0], 1.0, 1.0).unwrap();
        assert!((got[0] - best.1).abs() < 1e-12 && (got[1] - best.2).abs() < 1e-12);
    }

    #[test]
    fn primal_losses() {
        assert_eq!(LossKind::SmoothHinge.primal(2.0, 1.0), 0.0);
        assert_eq!(LossKind::SmoothHinge.primal(0.5, 1.0), 0.125);
        assert_eq!(LossKind::SmoothHinge.primal(-1.0, 1.0), 1.5);
        assert!((LossKind::Logistic.primal(0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((LossKind::Logistic.primal(-800.0, 1.0) - 800.0).abs() < 1e-9);
        assert_eq!(LossKind::Quadratic.primal(3.0, 1.0), 2.0);
    }

    #[test]
    fn objective_at_origin_with_zero_labels() {
        let a = BlockMatrix::from_dense(2, &[1.0, 2.0, 3.0, 4.0], &[1, 1]).unwrap();
        let p = SaddleProblem::new(LossKind::Quadratic, vec![0.0, 0.0], 0.3).unwrap();
        assert_eq!(p.primal_objective(&a, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(p.primal_objective(&a, &[0.0]).is_err());
    }

    #[test]
    fn problem_validation() {
        assert!(SaddleProblem::new(LossKind::Quadratic, vec![0.0], 0.0).is_err());
        assert!(SaddleProblem::new(LossKind::Logistic, vec![0.0], 1.0).is_err());
        assert!(SaddleProblem::new(LossKind::SmoothHinge, vec![1.0, -1.0], 1.0).is_ok());
    }

    #[test]
    fn loss_names_round_trip() {
        for kind in [LossKind::Quadratic, LossKind::SmoothHinge, LossKind::Logistic] {
            assert_eq!(kind.to_string().parse::<LossKind>().unwrap(), kind);
        }
        assert!("huber".parse::<LossKind>().is_err());
    }

    #[test]
    fn conjugate_second_derivative_at_least_gamma() {
        let h = 1e-4;
        for kind in [LossKind::Quadratic, LossKind::SmoothHinge, LossKind::Logistic] {
            for b in [1.0, -1.0] {
                for k in 1..100 {
                    let s = -(k as f64) / 100.0;
                    let y = b * s;
                    let f = |t: f64| kind.conjugate(t, b);
                    let second = (f(y + h) - 2.0 * f(y) + f(y - h)) / (h * h);
                    assert!(second >= kind.gamma() * (1.0 - 1e-4), "{kind} b={b} y={y}: {second}");
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn subproblem_grad(kind: LossKind, y: f64, b: f64, inner: f64, y_prev: f64, sigma: f64) -> f64 {
            let dconj = match kind {
                LossKind::Quadratic | LossKind::SmoothHinge => y + b,
                LossKind::Logistic => {
                    let s = b * y;
                    b * ((1.0 + s) / -s).ln()
                }
            };
            dconj - inner + (y - y_prev) / sigma
        }

        proptest! {
            #[test]
            fn quadratic_first_order(inner in -10.0..10.0f64, b in -5.0..5.0f64, y_prev in -5.0..5.0f64, sigma in 0.01..100.0f64) {
                let y = dual_prox_quadratic(inner, b, y_prev, sigma).unwrap();
                let g = subproblem_grad(LossKind::Quadratic, y, b, inner, y_prev, sigma);
                prop_assert!(g.abs() < 1e-8 * (1.0 + inner.abs() + y_prev.abs() / sigma));
            }

            #[test]
            fn hinge_kkt(inner in -10.0..10.0f64, pos in any::<bool>(), y_prev in -1.0..1.0f64, sigma in 0.01..100.0f64) {
                let b = if pos { 1.0 } else { -1.0 };
                let y = dual_prox_smooth_hinge(inner, b, y_prev, sigma).unwrap();
                let g = subproblem_grad(LossKind::SmoothHinge, y, b, inner, y_prev, sigma);
                let (lo, hi) = LossKind::SmoothHinge.dual_domain(b).unwrap();
                prop_assert!(y >= lo && y <= hi);
                // projected gradient vanishes
                let tol = 1e-8 * (1.0 + inner.abs() + 1.0 / sigma);
                if y > lo && y < hi {
                    prop_assert!(g.abs() < tol);
                } else if y == lo {
                    prop_assert!(g >= -tol);
                } else {
                    prop_assert!(g <= tol);
                }
            }

            #[test]
            fn logistic_first_order(inner in -10.0..10.0f64, pos in any::<bool>(), s_prev in -0.999..-0.001f64, sigma in 0.01..100.0f64) {
                let b = if pos { 1.0 } else { -1.0 };
                let p = dual_prox_logistic(inner, b, b * s_prev, sigma, 100).unwrap();
                prop_assert!(p.converged);
                prop_assert!(b * p.y > -1.0 && b * p.y < 0.0);
                let g = subproblem_grad(LossKind::Logistic, p.y, b, inner, b * s_prev, sigma);
                prop_assert!(g.abs() < 1e-8);
            }

            #[test]
            fn primal_prox_is_local_minimum(
                x_prev in prop::collection::vec(-5.0..5.0f64, 1..6),
                seed in -5.0..5.0f64,
                tau in 0.01..10.0f64,
                lambda in 0.001..10.0f64,
            ) {
                let u: Vec<f64> = x_prev.iter().enumerate().map(|(k, v)| seed * (k as f64 + 1.0) - v).collect();
                let x = primal_prox_l2(&x_prev, &u, tau, lambda).unwrap();
                let obj = |z: &[f64]| -> f64 {
                    z.iter().zip(&u).zip(&x_prev).map(|((zi, ui), pi)| {
                        0.5 * lambda * zi * zi + zi * ui + (zi - pi).powi(2) / (2.0 * tau)
                    }).sum()
                };
                let base = obj(&x);
                for k in 0..x.len() {
                    for delta in [1e-4, -1e-4] {
                        let mut z = x.clone();
                        z[k] += delta;
                        prop_assert!(base <= obj(&z));
                    }
                }
            }
        }
    }
}
