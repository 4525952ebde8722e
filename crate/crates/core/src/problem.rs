//! Sufficient statistics of `(X, y, sigma2)` and design diagnostics.

use alloc::format;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_len, Error, Result};

/// Relative eigenvalue floor below which `X^T X` is treated as singular.
pub const RANK_TOL: f64 = 1e-10;

/// Everything the objective needs from the data.
///
/// `a` is the off-diagonal part of `X^T X / sigma2` (zero diagonal), `d` its
/// diagonal and `w = X^T y / sigma2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemStats {
    pub w: DVector<f64>,
    pub a: DMatrix<f64>,
    pub d: DVector<f64>,
    pub sigma2: f64,
    pub n: usize,
    pub p: usize,
    pub y_sq_norm: f64,
}

impl ProblemStats {
    /// `A + diag(d)`, i.e. `X^T X / sigma2`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = self.a.clone();
        for i in 0..self.p {
            g[(i, i)] = self.d[i];
        }
        g
    }

    /// `Tr(A^2) / p`.
    pub fn trace_a2_over_p(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>() / self.p as f64
    }
}

fn validate_sigma2(sigma2: f64) -> Result<()> {
    if sigma2.is_finite() && sigma2 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")))
    }
}

/// Symmetric `X^T X` with the upper triangle mirrored onto the lower.
fn symmetric_gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = x.tr_mul(x);
    let p = g.ncols();
    for j in 0..p {
        for i in (j + 1)..p {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

pub fn build_stats(x: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64) -> Result<ProblemStats> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument("design must have n >= 1 and p >= 1".into()));
    }
    check_len("response", n, y.len())?;
    validate_sigma2(sigma2)?;
    if let Some(j) = (0..p).find(|&j| x.column(j).iter().all(|&v| v == 0.0)) {
        return Err(Error::ZeroColumn(j));
    }

    let mut a = symmetric_gram(x) / sigma2;
    let d = a.diagonal();
    a.fill_diagonal(0.0);
    let w = x.tr_mul(y) / sigma2;
    Ok(ProblemStats {
        w,
        a,
        d,
        sigma2,
        n,
        p,
        y_sq_norm: y.norm_squared(),
    })
}

/// Thresholds used by [`check_design`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignThresholds {
    pub c1: f64,
    pub c2: f64,
    pub mf_threshold: f64,
}

impl Default for DesignThresholds {
    fn default() -> Self {
        DesignThresholds {
            c1: 1e-3,
            c2: 1e3,
            mf_threshold: 0.5,
        }
    }
}

/// Diagnostic summary of a design. Never blocks a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub trace_a2_over_p: f64,
    pub full_column_rank: bool,
    pub passes_assumption1: bool,
    pub meanfield_ok: bool,
}

fn eigen_extremes(gram: DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(gram);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lmin, lmax)
}

fn is_full_rank(lmin: f64, lmax: f64) -> bool {
    lmax > 0.0 && lmin > RANK_TOL * lmax
}

/// Eigenvalue bounds of `X^T X / sigma2` and the mean-field diagnostic
/// `Tr(A^2) / p`.
pub fn check_design(x: &DMatrix<f64>, sigma2: f64, thresholds: DesignThresholds) -> Result<DesignReport> {
    let (_, p) = x.shape();
    if p == 0 {
        return Err(Error::InvalidArgument("design has no columns".into()));
    }
    validate_sigma2(sigma2)?;
    let gram = symmetric_gram(x) / sigma2;
    let mut off = 0.0;
    for j in 0..p {
        for i in 0..p {
            if i != j {
                off += gram[(i, j)] * gram[(i, j)];
            }
        }
    }
    let trace_a2_over_p = off / p as f64;
    let (lambda_min, lambda_max) = eigen_extremes(gram);
    Ok(DesignReport {
        lambda_min,
        lambda_max,
        trace_a2_over_p,
        full_column_rank: is_full_rank(lambda_min, lambda_max),
        passes_assumption1: lambda_min >= thresholds.c1 && lambda_max <= thresholds.c2,
        meanfield_ok: trace_a2_over_p <= thresholds.mf_threshold,
    })
}

/// Correlated Gaussian sequence model equivalent to the regression:
/// `z ~ N(beta, sigma)` with `z = (X^T X)^{-1} X^T y`, `sigma = sigma2 (X^T X)^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModel {
    pub z: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

pub fn sequence_reduce(x: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64) -> Result<SequenceModel> {
    let (n, _) = x.shape();
    check_len("response", n, y.len())?;
    validate_sigma2(sigma2)?;
    let gram = symmetric_gram(x);
    let (lambda_min, lambda_max) = eigen_extremes(gram.clone());
    if !is_full_rank(lambda_min, lambda_max) {
        return Err(Error::RankDeficient { lambda_min, lambda_max });
    }
    let chol = gram.cholesky().ok_or(Error::RankDeficient { lambda_min, lambda_max })?;
    let z = chol.solve(&x.tr_mul(y));
    let mut sigma = chol.inverse() * sigma2;
    let p = sigma.ncols();
    for j in 0..p {
        for i in (j + 1)..p {
            sigma[(i, j)] = sigma[(j, i)];
        }
    }
    Ok(SequenceModel { z, sigma })
}
