//! Seeded synthetic designs and responses.
//!
//! Each named draw (design, beta, noise) reads its own ChaCha20 stream of the
//! seed, so changing one part of a configuration leaves the others intact.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::tilt::PriorGrid;

const DESIGN_STREAM: u64 = 1;
const BETA_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignKind {
    IidGaussian,
    /// Rows are stationary AR(1) sequences with unit marginal variance.
    ArGaussian {
        rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub design: DesignKind,
    pub prior_truth: PriorGrid,
    pub sigma2: f64,
    pub seed: u64,
    /// Scale entries by `1/sqrt(n)`.
    pub row_normalize: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidArgument("n and p must be positive".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidArgument("sigma2 must be positive".into()));
        }
        if let DesignKind::ArGaussian { rho } = self.design {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(Error::InvalidArgument("rho must lie in (-1, 1)".into()));
            }
        }
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn gen_design(cfg: &SimConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let (n, p) = (cfg.n, cfg.p);
    let mut rng = stream(cfg.seed, DESIGN_STREAM);
    let scale = if cfg.row_normalize { 1.0 / sqrt(n as f64) } else { 1.0 };
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let v = match cfg.design {
                DesignKind::ArGaussian { rho } if j > 0 => rho * prev + sqrt(1.0 - rho * rho) * xi,
                _ => xi,
            };
            prev = v;
            x[(i, j)] = v * scale;
        }
    }
    Ok(x)
}

fn sample_atom(prior: &PriorGrid, u: f64) -> f64 {
    let mut acc = 0.0;
    let mut last = 0;
    for (r, &w) in prior.weights().iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = r;
            if u < acc {
                return prior.atoms()[r];
            }
        }
    }
    prior.atoms()[last]
}

/// Draws `beta` i.i.d. from the prior and `y = X beta + eps` with
/// `eps ~ N(0, sigma2 I)`.
pub fn gen_data(
    x: &DMatrix<f64>,
    prior_truth: &PriorGrid,
    sigma2: f64,
    seed: u64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument("sigma2 must be positive".into()));
    }
    let mut beta_rng = stream(seed, BETA_STREAM);
    let beta = DVector::from_fn(x.ncols(), |_, _| {
        let u: f64 = StandardUniform.sample(&mut beta_rng);
        sample_atom(prior_truth, u)
    });
    let mut noise_rng = stream(seed, NOISE_STREAM);
    let sigma = sqrt(sigma2);
    let noise: Vec<f64> = (0..x.nrows())
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut noise_rng);
            sigma * e
        })
        .collect();
    let y = x * &beta + DVector::from_vec(noise);
    Ok((beta, y))
}

/// Design and data for a configuration.
pub fn simulate(cfg: &SimConfig) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let x = gen_design(cfg)?;
    let (beta, y) = gen_data(&x, &cfg.prior_truth, cfg.sigma2, cfg.seed)?;
    Ok((x, beta, y))
}
