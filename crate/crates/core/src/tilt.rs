//! Quadratic tilts of a discrete prior.
//!
//! For a prior `mu = sum_r p_r delta_{a_r}` the tilt with natural parameter
//! `gamma` and precision `d` reweights atom `r` by `exp(a_r gamma - a_r^2 d / 2)`.
//! Its log-normalizer is
//!
//! ```text
//! c(gamma, d) = log sum_r p_r exp(a_r gamma - a_r^2 d / 2)
//! ```
//!
//! and `dc/dgamma` is the tilted mean. Everything here works on log-weights with
//! max-subtraction: during optimization `a_r gamma - a_r^2 d / 2` can reach
//! several hundred in magnitude.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln, log_sum_exp};

/// Tolerance on the sum of prior weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default bisection tolerance (mean scale) for [`natural_from_mean`].
pub const DEFAULT_INVERSION_TOL: f64 = 1e-10;

/// Equally spaced atom grid on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub k: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: -1.0,
            hi: 1.0,
            k: 100,
        }
    }
}

impl GridSpec {
    pub fn atoms(&self) -> Result<Vec<f64>> {
        if self.k == 0 {
            return Err(Error::InvalidPrior("grid needs at least one atom".into()));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < self.lo {
            return Err(Error::InvalidPrior(format!(
                "grid interval [{}, {}] is not a finite ordered interval",
                self.lo, self.hi
            )));
        }
        if self.k == 1 {
            return Ok(alloc::vec![self.lo]);
        }
        if self.hi == self.lo {
            return Err(Error::InvalidPrior("grid with k >= 2 needs hi > lo".into()));
        }
        let step = (self.hi - self.lo) / (self.k - 1) as f64;
        let mut atoms: Vec<f64> = (0..self.k).map(|r| self.lo + step * r as f64).collect();
        // Pin the right endpoint exactly.
        atoms[self.k - 1] = self.hi;
        Ok(atoms)
    }
}

/// A discrete prior on a fixed, strictly increasing atom grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorGrid {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    support: (f64, f64),
}

impl PriorGrid {
    /// Prior whose declared support is the hull of its atoms.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let (lo, hi) = match (atoms.first(), atoms.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::InvalidPrior("prior needs at least one atom".into())),
        };
        Self::with_support(atoms, weights, lo, hi)
    }

    pub fn with_support(atoms: Vec<f64>, weights: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPrior("prior needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "prior weights",
                expected: atoms.len(),
                found: weights.len(),
            });
        }
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::InvalidPrior(format!(
                "support [{lo}, {hi}] is not a finite ordered interval"
            )));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPrior("atoms must be finite".into()));
        }
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPrior("atoms must be strictly increasing".into()));
        }
        if atoms[0] < lo || atoms[atoms.len() - 1] > hi {
            return Err(Error::InvalidPrior(format!(
                "atoms must lie inside the support [{lo}, {hi}]"
            )));
        }
        let mut prior = PriorGrid {
            log_weights: Vec::new(),
            weights: Vec::new(),
            atoms,
            support: (lo, hi),
        };
        prior.set_weights(weights)?;
        Ok(prior)
    }

    /// Uniform weights on the grid described by `spec`.
    pub fn uniform(spec: GridSpec) -> Result<Self> {
        let atoms = spec.atoms()?;
        let k = atoms.len();
        Self::with_support(atoms, alloc::vec![1.0 / k as f64; k], spec.lo, spec.hi)
    }

    /// Point mass at `c`.
    pub fn point_mass(c: f64) -> Result<Self> {
        Self::new(alloc::vec![c], alloc::vec![1.0])
    }

    /// Same as [`PriorGrid::new`] after dividing `raw` by its sum.
    pub fn normalized(atoms: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidPrior("weights must have positive finite total".into()));
        }
        Self::new(atoms, raw.into_iter().map(|w| w / total).collect())
    }

    /// Replaces the weights, keeping atoms and support.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        let mut out = PriorGrid {
            atoms: self.atoms.clone(),
            weights: Vec::new(),
            log_weights: Vec::new(),
            support: self.support,
        };
        out.set_weights(weights)?;
        Ok(out)
    }

    fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch {
                what: "prior weights",
                expected: self.atoms.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidPrior("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidPrior(format!("weights sum to {total}, not 1")));
        }
        self.log_weights = weights
            .iter()
            .map(|&w| if w > 0.0 { ln(w) } else { f64::NEG_INFINITY })
            .collect();
        self.weights = weights;
        Ok(())
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Smallest and largest atom carrying positive weight.
    pub fn positive_hull(&self) -> (f64, f64) {
        let mut it = self
            .atoms
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&a, _)| a);
        let first = it.next().unwrap_or(self.atoms[0]);
        let last = it.next_back().unwrap_or(first);
        (first, last)
    }

    pub fn positive_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    #[inline]
    fn exponent(&self, r: usize, gamma: f64, d: f64) -> f64 {
        let a = self.atoms[r];
        self.log_weights[r] + a * gamma - 0.5 * a * a * d
    }
}

/// Log-normalizer, mean and variance of one tilt, computed in a single pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltSummary {
    pub log_partition: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of a tilted prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn tilt_summary(prior: &PriorGrid, gamma: f64, d: f64) -> TiltSummary {
    let k = prior.len();
    let mut top = 0;
    let mut max = f64::NEG_INFINITY;
    for r in 0..k {
        let t = prior.exponent(r, gamma, d);
        if t > max {
            max = t;
            top = r;
        }
    }
    // Moments are accumulated around the dominant atom so that a nearly
    // degenerate tilt keeps an accurate (tiny) variance.
    let pivot = prior.atoms[top];
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for r in 0..k {
        let e = exp(prior.exponent(r, gamma, d) - max);
        let dev = prior.atoms[r] - pivot;
        s0 += e;
        s1 += e * dev;
        s2 += e * dev * dev;
    }
    let shift = s1 / s0;
    TiltSummary {
        log_partition: max + ln(s0),
        mean: pivot + shift,
        variance: (s2 / s0 - shift * shift).max(0.0),
    }
}

/// `c(gamma, d) = log sum_r p_r exp(a_r gamma - a_r^2 d / 2)`.
pub fn log_partition(prior: &PriorGrid, gamma: f64, d: f64) -> f64 {
    let terms: Vec<f64> = (0..prior.len()).map(|r| prior.exponent(r, gamma, d)).collect();
    log_sum_exp(&terms)
}

pub fn tilt_moments(prior: &PriorGrid, gamma: f64, d: f64) -> TiltMoments {
    let s = tilt_summary(prior, gamma, d);
    TiltMoments {
        mean: s.mean,
        variance: s.variance,
    }
}

/// A quadratic tilt of a [`PriorGrid`], stored as normalized log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedMeasure {
    pub atoms: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub gamma: f64,
    pub d: f64,
}

impl TiltedMeasure {
    pub fn probs(&self) -> Vec<f64> {
        self.log_weights.iter().map(|&l| exp(l)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.log_weights).map(|(a, &l)| a * exp(l)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms
            .iter()
            .zip(&self.log_weights)
            .map(|(a, &l)| (a - m) * (a - m) * exp(l))
            .sum()
    }
}

pub fn tilt_measure(prior: &PriorGrid, gamma: f64, d: f64) -> TiltedMeasure {
    let c = log_partition(prior, gamma, d);
    let log_weights = (0..prior.len())
        .map(|r| {
            if prior.weights[r] > 0.0 {
                prior.exponent(r, gamma, d) - c
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    TiltedMeasure {
        atoms: prior.atoms.clone(),
        log_weights,
        gamma,
        d,
    }
}

/// `KL(mu_{gamma,d} || mu_{0,d}) = gamma * mean - c(gamma, d) + c(0, d)`.
pub fn tilt_kl(prior: &PriorGrid, gamma: f64, d: f64) -> f64 {
    if gamma == 0.0 || prior.positive_count() < 2 {
        return 0.0;
    }
    let s = tilt_summary(prior, gamma, d);
    (gamma * s.mean - s.log_partition + log_partition(prior, 0.0, d)).max(0.0)
}

/// Inverse of the mean map: the `gamma` whose tilt has mean `u`.
///
/// Bisection on the increasing map `gamma -> mean`, after growing the bracket
/// by doubling. Stops once the mean is within `tol` of `u`.
pub fn natural_from_mean(prior: &PriorGrid, u: f64, d: f64, tol: f64) -> Result<f64> {
    if prior.positive_count() < 2 {
        return Err(Error::DegeneratePrior);
    }
    let (lo_atom, hi_atom) = prior.positive_hull();
    if !(u > lo_atom && u < hi_atom) {
        return Err(Error::MeanOutOfRange {
            u,
            lo: lo_atom,
            hi: hi_atom,
        });
    }
    let mean = |g: f64| tilt_summary(prior, g, d).mean;

    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut expansions = 0;
    while mean(lo) > u && expansions < 2000 {
        hi = lo;
        lo *= 2.0;
        expansions += 1;
    }
    while mean(hi) < u && expansions < 2000 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..2000 {
        mid = 0.5 * (lo + hi);
        let m = mean(mid);
        if (m - u).abs() <= tol {
            break;
        }
        if m < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid <= lo && mid >= hi {
            break;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            mid = 0.5 * (lo + hi);
            break;
        }
    }
    Ok(mid)
}

/// Left-continuous generalized inverse CDF: `inf { x : F(x) >= alpha }`.
///
/// `alpha <= 0` returns the smallest atom with positive mass; if rounding
/// keeps the cumulative sum below `alpha`, the largest such atom is returned.
pub fn quantile(measure: &TiltedMeasure, alpha: f64) -> f64 {
    let mut cum = 0.0;
    let mut last = f64::NAN;
    for (&a, &l) in measure.atoms.iter().zip(&measure.log_weights) {
        if l == f64::NEG_INFINITY {
            continue;
        }
        cum += exp(l);
        last = a;
        if cum >= alpha {
            return a;
        }
    }
    last
}
