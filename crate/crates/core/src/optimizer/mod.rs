//! Alternating maximization of the mean-field objective over the tilt vector
//! `gamma` (L-BFGS) and the prior weights (projected gradient ascent).

mod lbfgs;
mod simplex;

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

pub use simplex::project_simplex;

use crate::elbo::{evaluate, Evaluation};
use crate::error::{check_len, Error, Result};
use crate::math::{dot, norm_inf};
use crate::problem::{build_stats, ProblemStats, RANK_TOL};
use crate::tilt::{GridSpec, PriorGrid};

/// How the starting coefficient estimate is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    Ols,
    Ridge,
    /// A user-supplied estimate (e.g. from a Lasso fit).
    Provided(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Outer stopping rule on `|delta M~| / p`.
    pub tol_outer: f64,
    pub max_outer: usize,
    /// Inner stopping rule on the max-norm of the relevant gradient.
    pub tol_grad: f64,
    pub max_inner_gamma: usize,
    pub max_inner_weights: usize,
    pub lbfgs_memory: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub init_mode: InitMode,
    /// Ridge penalty; `None` means `1e-3 * tr(X^T X) / p`.
    pub ridge_lambda: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol_outer: 1e-8,
            max_outer: 500,
            tol_grad: 1e-6,
            max_inner_gamma: 200,
            max_inner_weights: 200,
            lbfgs_memory: 10,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            init_mode: InitMode::Ridge,
            ridge_lambda: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tol_outer", self.tol_outer)?;
        positive("tol_grad", self.tol_grad)?;
        for (name, v) in [("armijo_c", self.armijo_c), ("backtrack_factor", self.backtrack_factor)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if let Some(l) = self.ridge_lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidArgument(format!("ridge_lambda must be >= 0, got {l}")));
            }
        }
        Ok(())
    }

    fn lbfgs(&self) -> lbfgs::Settings {
        lbfgs::Settings {
            memory: self.lbfgs_memory,
            max_iter: self.max_inner_gamma,
            tol_grad: self.tol_grad,
            armijo_c: self.armijo_c,
            backtrack_factor: self.backtrack_factor,
        }
    }
}

/// Starting point for `gamma` from a coefficient estimate: `w - A beta`.
pub fn init_gamma(stats: &ProblemStats, beta_hat: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("beta_hat", stats.p, beta_hat.len())?;
    Ok(&stats.w - &stats.a * beta_hat)
}

/// Least-squares (QR) or ridge (Cholesky) coefficient estimate.
pub fn estimate_beta_init(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    mode: &InitMode,
    ridge_lambda: Option<f64>,
) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    check_len("response", n, y.len())?;
    match mode {
        InitMode::Provided(beta) => {
            check_len("provided beta", p, beta.len())?;
            Ok(DVector::from_column_slice(beta))
        }
        InitMode::Ols => {
            let gram = x.tr_mul(x);
            let eig = nalgebra::SymmetricEigen::new(gram);
            let lambda_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            let lambda_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if n < p || !(lambda_max > 0.0 && lambda_min > RANK_TOL * lambda_max) {
                return Err(Error::RankDeficient { lambda_min, lambda_max });
            }
            let qr = x.clone().qr();
            let qty = qr.q().tr_mul(y);
            qr.r()
                .solve_upper_triangular(&qty)
                .ok_or(Error::RankDeficient { lambda_min, lambda_max })
        }
        InitMode::Ridge => {
            let mut gram = x.tr_mul(x);
            let lambda = ridge_lambda.unwrap_or_else(|| 1e-3 * gram.trace() / p as f64);
            for i in 0..p {
                gram[(i, i)] += lambda;
            }
            let chol = gram.cholesky().ok_or(Error::NotSpd)?;
            Ok(chol.solve(&x.tr_mul(y)))
        }
    }
}

/// Result of one inner phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFit {
    pub gamma: DVector<f64>,
    pub m_tilde: f64,
    pub iterations: usize,
    pub converged: bool,
    /// No step down to 1e-16 satisfied Armijo; `gamma` is the best iterate.
    pub line_search_failed: bool,
}

/// Maximizes `M~` over `gamma` with the prior held fixed.
pub fn optimize_gamma(
    stats: &ProblemStats,
    prior: &PriorGrid,
    gamma0: &DVector<f64>,
    config: &FitConfig,
) -> Result<GammaFit> {
    check_len("gamma", stats.p, gamma0.len())?;
    let objective = |g: &[f64]| -> Result<(f64, Vec<f64>)> {
        let ev = evaluate(stats, &DVector::from_column_slice(g), prior)?;
        let grad = ev.grad_gamma();
        Ok((-ev.m_tilde, grad.iter().map(|v| -v).collect()))
    };
    let out = lbfgs::minimize(objective, gamma0.as_slice().to_vec(), &config.lbfgs())?;
    Ok(GammaFit {
        gamma: DVector::from_vec(out.x),
        m_tilde: -out.value,
        iterations: out.iterations,
        converged: out.converged,
        line_search_failed: out.line_search_failed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightsFit {
    pub prior: PriorGrid,
    pub m_tilde: f64,
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failed: bool,
}

fn projected_step(weights: &[f64], grad: &[f64], t: f64) -> Vec<f64> {
    let moved: Vec<f64> = weights.iter().zip(grad).map(|(w, g)| w + t * g).collect();
    project_simplex(&moved)
}

fn projected_gradient_norm(weights: &[f64], grad: &[f64]) -> f64 {
    let q = projected_step(weights, grad, 1.0);
    q.iter().zip(weights).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Projected gradient ascent on the prior weights with `gamma` held fixed.
///
/// Steps follow the projection arc `P(p + t g)` with Armijo backtracking; the
/// trial step comes from a Barzilai-Borwein estimate of the previous pair.
pub fn optimize_weights(
    stats: &ProblemStats,
    gamma: &DVector<f64>,
    start: &PriorGrid,
    config: &FitConfig,
) -> Result<WeightsFit> {
    let mut prior = start.clone();
    let mut ev: Evaluation = evaluate(stats, gamma, &prior)?;
    let mut grad = ev.grad_weights(stats, gamma, &prior);
    let mut step = 1.0 / norm_inf(&grad).max(1e-12);
    let mut iterations = 0;
    let mut line_search_failed = false;
    let mut converged = false;

    while iterations < config.max_inner_weights {
        if projected_gradient_norm(prior.weights(), &grad) <= config.tol_grad {
            converged = true;
            break;
        }
        let mut t = step;
        let accepted = loop {
            if t < 1e-16 {
                break None;
            }
            let cand = projected_step(prior.weights(), &grad, t);
            let delta: Vec<f64> = cand.iter().zip(prior.weights()).map(|(a, b)| a - b).collect();
            if norm_inf(&delta) == 0.0 {
                break None;
            }
            let cand_prior = prior.with_weights(cand)?;
            let cand_ev = evaluate(stats, gamma, &cand_prior)?;
            let gain = dot(&grad, &delta);
            if cand_ev.m_tilde >= ev.m_tilde + config.armijo_c * gain && cand_ev.m_tilde >= ev.m_tilde {
                break Some((cand_prior, cand_ev, delta, t));
            }
            t *= config.backtrack_factor;
        };
        let Some((new_prior, new_ev, s, used)) = accepted else {
            line_search_failed = true;
            break;
        };
        let new_grad = new_ev.grad_weights(stats, gamma, &new_prior);
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy < 0.0 {
            (dot(&s, &s) / -sy).clamp(1e-12, 1e12)
        } else {
            (used * 4.0).min(1e12)
        };
        prior = new_prior;
        ev = new_ev;
        grad = new_grad;
        iterations += 1;
    }
    if !converged {
        converged = projected_gradient_norm(prior.weights(), &grad) <= config.tol_grad;
    }
    Ok(WeightsFit {
        prior,
        m_tilde: ev.m_tilde,
        iterations,
        converged,
        line_search_failed,
    })
}

/// Fitted prior, tilts, and convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub prior: PriorGrid,
    pub gamma: DVector<f64>,
    /// `M~` at the start and after every outer iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub outer_iters: usize,
    pub gamma_iters: usize,
    pub weight_iters: usize,
    pub line_search_failures: usize,
    /// Largest `max(|sum p - 1|, max_r -p_r)` over all outer iterations.
    pub simplex_violation: f64,
}

fn simplex_violation(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().sum();
    weights.iter().fold((sum - 1.0).abs(), |m, &w| m.max(-w))
}

/// Fits the prior from raw data.
pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64, grid: GridSpec, config: &FitConfig) -> Result<FitResult> {
    let stats = build_stats(x, y, sigma2)?;
    let beta0 = estimate_beta_init(x, y, &config.init_mode, config.ridge_lambda)?;
    let gamma0 = init_gamma(&stats, &beta0)?;
    fit_stats(&stats, grid, gamma0, config)
}

/// Alternating ascent from uniform weights and a given starting `gamma`.
pub fn fit_stats(stats: &ProblemStats, grid: GridSpec, gamma0: DVector<f64>, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if grid.k < 2 {
        return Err(Error::InvalidPrior("fitting needs a grid with k >= 2".into()));
    }
    check_len("gamma", stats.p, gamma0.len())?;
    let mut prior = PriorGrid::uniform(grid)?;
    let mut gamma = gamma0;
    let mut value = evaluate(stats, &gamma, &prior)?.m_tilde;
    let mut trace = alloc::vec![value];
    let mut result = FitResult {
        prior: prior.clone(),
        gamma: gamma.clone(),
        trace: Vec::new(),
        converged: false,
        outer_iters: 0,
        gamma_iters: 0,
        weight_iters: 0,
        line_search_failures: 0,
        simplex_violation: simplex_violation(prior.weights()),
    };

    for outer in 1..=config.max_outer {
        let g = optimize_gamma(stats, &prior, &gamma, config)?;
        gamma = g.gamma;
        let wts = optimize_weights(stats, &gamma, &prior, config)?;
        prior = wts.prior;
        result.simplex_violation = result.simplex_violation.max(simplex_violation(prior.weights()));

        result.gamma_iters += g.iterations;
        result.weight_iters += wts.iterations;
        result.line_search_failures += g.line_search_failed as usize + wts.line_search_failed as usize;
        result.outer_iters = outer;

        let change = wts.m_tilde - value;
        value = wts.m_tilde;
        trace.push(value);
        if change.abs() <= config.tol_outer * stats.p as f64 {
            result.converged = true;
            break;
        }
    }
    result.prior = prior;
    result.gamma = gamma;
    result.trace = trace;
    Ok(result)
}
