//! Exact reference computations by exhaustive enumeration of the atom grid.
//!
//! These are exponential in `p` and guarded at `k^p <= 10^7`. They exist to
//! check the mean-field machinery on small problems.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::elbo::evidence_offset;
use crate::error::{check_len, Error, Result};
use crate::math::{exp, ln, CompensatedSum};
use crate::problem::ProblemStats;
use crate::tilt::{log_partition, GridSpec, PriorGrid, TiltedMeasure};

/// Largest number of grid configurations an enumeration will visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// A probability measure on finitely many sorted points of the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure1D {
    pub atoms: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteMeasure1D {
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        check_len("probabilities", atoms.len(), probs.len())?;
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("measure needs at least one atom".into()));
        }
        if atoms.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("atoms must be strictly increasing".into()));
        }
        if probs.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(DiscreteMeasure1D { atoms, probs })
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.probs).map(|(a, q)| a * q).sum()
    }
}

impl From<&TiltedMeasure> for DiscreteMeasure1D {
    fn from(m: &TiltedMeasure) -> Self {
        DiscreteMeasure1D {
            atoms: m.atoms.clone(),
            probs: m.probs(),
        }
    }
}

fn guard(k: usize, p: usize) -> Result<()> {
    let mut count: u128 = 1;
    for _ in 0..p {
        count = count.saturating_mul(k as u128);
        if count > ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
    }
    Ok(())
}

/// Calls `f` on every index tuple in `{0..k}^p`, last coordinate fastest.
fn for_each_config(k: usize, p: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; p];
    loop {
        f(&idx);
        let mut pos = p;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Log-density (up to the data-only constant) of a grid configuration under
/// the exact posterior: `sum_i log mu_{0,d_i}(a_{r_i}) + w^T beta - beta^T A beta / 2`.
struct PosteriorTerms<'a> {
    stats: &'a ProblemStats,
    atoms: &'a [f64],
    base: Vec<Vec<f64>>,
}

impl<'a> PosteriorTerms<'a> {
    fn new(stats: &'a ProblemStats, prior: &'a PriorGrid) -> Result<Self> {
        guard(prior.len(), stats.p)?;
        let atoms = prior.atoms();
        let base = (0..stats.p)
            .map(|i| {
                let d = stats.d[i];
                let c0 = log_partition(prior, 0.0, d);
                prior
                    .log_weights()
                    .iter()
                    .zip(atoms)
                    .map(|(lw, a)| lw - 0.5 * a * a * d - c0)
                    .collect()
            })
            .collect();
        Ok(PosteriorTerms { stats, atoms, base })
    }

    fn term(&self, idx: &[usize]) -> f64 {
        let mut t = 0.0;
        for (i, &ri) in idx.iter().enumerate() {
            let ai = self.atoms[ri];
            t += self.base[i][ri] + self.stats.w[i] * ai;
            let quad: f64 = idx
                .iter()
                .enumerate()
                .map(|(j, &rj)| self.stats.a[(i, j)] * self.atoms[rj])
                .sum();
            t -= 0.5 * ai * quad;
        }
        t
    }

    fn max_term(&self) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for_each_config(self.atoms.len(), self.stats.p, |idx| {
            max = max.max(self.term(idx));
        });
        max
    }
}

/// `log Z_p(w, prior)`, the normalizer of the exact posterior relative to the
/// product of base tilts `mu_{0,d_i}`.
pub fn exact_log_z(stats: &ProblemStats, prior: &PriorGrid) -> Result<f64> {
    let terms = PosteriorTerms::new(stats, prior)?;
    let max = terms.max_term();
    let mut sum = CompensatedSum::default();
    for_each_config(prior.len(), stats.p, |idx| sum.add(exp(terms.term(idx) - max)));
    Ok(max + ln(sum.total()))
}

/// Exact posterior marginals of every coordinate on the prior's atoms.
pub fn exact_posterior_marginals(stats: &ProblemStats, prior: &PriorGrid) -> Result<Vec<DiscreteMeasure1D>> {
    let terms = PosteriorTerms::new(stats, prior)?;
    let max = terms.max_term();
    let k = prior.len();
    let mut mass = vec![vec![CompensatedSum::default(); k]; stats.p];
    for_each_config(k, stats.p, |idx| {
        let e = exp(terms.term(idx) - max);
        for (i, &r) in idx.iter().enumerate() {
            mass[i][r].add(e);
        }
    });
    Ok(mass
        .iter()
        .map(|row| {
            let vals: Vec<f64> = row.iter().map(CompensatedSum::total).collect();
            let total: f64 = vals.iter().sum();
            DiscreteMeasure1D {
                atoms: prior.atoms().to_vec(),
                probs: vals.iter().map(|v| v / total).collect(),
            }
        })
        .collect())
}

/// Exact `log m(y)` under the prior.
pub fn exact_log_marginal(stats: &ProblemStats, prior: &PriorGrid) -> Result<f64> {
    let c0: f64 = stats.d.iter().map(|&d| log_partition(prior, 0.0, d)).sum();
    Ok(evidence_offset(stats) + c0 + exact_log_z(stats, prior)?)
}

/// Exact log-density of `z ~ N(theta, sigma)` with `theta_i` i.i.d. from the prior.
pub fn exact_log_marginal_seq(z: &DVector<f64>, sigma: &DMatrix<f64>, prior: &PriorGrid) -> Result<f64> {
    let p = z.len();
    check_len("covariance rows", p, sigma.nrows())?;
    check_len("covariance columns", p, sigma.ncols())?;
    guard(prior.len(), p)?;
    let chol = sigma.clone().cholesky().ok_or(Error::NotSpd)?;
    let l = chol.l();
    let log_det: f64 = (0..p).map(|i| 2.0 * ln(l[(i, i)])).sum();
    let atoms = prior.atoms();
    let logw = prior.log_weights();

    let term = |idx: &[usize]| -> f64 {
        let diff = DVector::from_fn(p, |i, _| z[i] - atoms[idx[i]]);
        let solved = l.solve_lower_triangular(&diff).expect("cholesky factor is nonsingular");
        idx.iter().map(|&r| logw[r]).sum::<f64>() - 0.5 * solved.norm_squared()
    };
    let mut max = f64::NEG_INFINITY;
    for_each_config(prior.len(), p, |idx| max = max.max(term(idx)));
    let mut sum = CompensatedSum::default();
    for_each_config(prior.len(), p, |idx| sum.add(exp(term(idx) - max)));
    Ok(-0.5 * p as f64 * ln(2.0 * core::f64::consts::PI) - 0.5 * log_det + max + ln(sum.total()))
}

/// Nonparametric maximum likelihood over weights on a small grid: exhaustive
/// search over the weight lattice with step `1 / resolution`, then pairwise
/// mass-transfer polishing. Ties on the lattice go to the lexicographically
/// smallest weight vector.
pub fn toy_npmle(stats: &ProblemStats, grid: GridSpec, resolution: usize) -> Result<PriorGrid> {
    if grid.k > 3 || stats.p > 6 {
        return Err(Error::TooLarge {
            count: (grid.k as u128).saturating_pow(stats.p as u32),
            limit: 3u128.pow(6),
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let atoms = grid.atoms()?;
    let k = atoms.len();
    let evaluate = |w: &[f64]| -> Result<f64> {
        let prior = PriorGrid::with_support(atoms.clone(), w.to_vec(), grid.lo, grid.hi)?;
        exact_log_marginal(stats, &prior)
    };
    let tie = |v: f64| 1e-12 * (1.0 + v.abs());

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut counts = vec![0usize; k];
    let mut visit = |counts: &[usize]| -> Result<()> {
        let w: Vec<f64> = counts.iter().map(|&c| c as f64 / resolution as f64).collect();
        let v = evaluate(&w)?;
        match &best {
            Some((b, _)) if v <= b + tie(*b) => {}
            _ => best = Some((v, w)),
        }
        Ok(())
    };
    lattice(&mut counts, 0, resolution, &mut visit)?;
    let (mut value, mut weights) = best.expect("lattice is nonempty");

    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    for _ in 0..50 {
        let mut improved = false;
        for r in 0..k {
            for s in (r + 1)..k {
                // Move t units of mass from atom s to atom r.
                let (lo, hi) = (-weights[r], weights[s]);
                if hi - lo <= 0.0 {
                    continue;
                }
                let at = |t: f64| -> Result<f64> {
                    let mut w = weights.clone();
                    w[r] = (w[r] + t).max(0.0);
                    w[s] = (w[s] - t).max(0.0);
                    let total: f64 = w.iter().sum();
                    w.iter_mut().for_each(|x| *x /= total);
                    evaluate(&w)
                };
                let (mut a, mut b) = (lo, hi);
                for _ in 0..80 {
                    let m1 = b - GOLDEN * (b - a);
                    let m2 = a + GOLDEN * (b - a);
                    if at(m1)? < at(m2)? {
                        a = m1;
                    } else {
                        b = m2;
                    }
                }
                let t = 0.5 * (a + b);
                let v = at(t)?;
                if v > value + tie(value) {
                    weights[r] = (weights[r] + t).max(0.0);
                    weights[s] = (weights[s] - t).max(0.0);
                    let total: f64 = weights.iter().sum();
                    weights.iter_mut().for_each(|x| *x /= total);
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    PriorGrid::with_support(atoms, weights, grid.lo, grid.hi)
}

/// Visits all compositions of `remaining` into the slots `pos..`, in
/// ascending lexicographic order.
fn lattice(
    counts: &mut [usize],
    pos: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        return visit(counts);
    }
    for c in 0..=remaining {
        counts[pos] = c;
        lattice(counts, pos + 1, remaining - c, visit)?;
    }
    Ok(())
}

/// 1-Wasserstein distance on the line: `integral |F_a - F_b|`.
pub fn wasserstein1(a: &DiscreteMeasure1D, b: &DiscreteMeasure1D) -> f64 {
    let mut points: Vec<f64> = a.atoms.iter().chain(&b.atoms).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let (mut ia, mut ib) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut total = 0.0;
    for win in points.windows(2) {
        let x = win[0];
        while ia < a.atoms.len() && a.atoms[ia] <= x {
            fa += a.probs[ia];
            ia += 1;
        }
        while ib < b.atoms.len() && b.atoms[ib] <= x {
            fb += b.probs[ib];
            ib += 1;
        }
        total += (fa - fb).abs() * (win[1] - x);
    }
    total
}
