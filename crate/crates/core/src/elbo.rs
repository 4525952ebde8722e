//! Mean-field objective in natural parameters and its exact gradients.
//!
//! With `u_i` the mean of the tilt `(gamma_i, d_i)` of the prior,
//!
//! ```text
//! M~(gamma) = -1/2 u^T A u + u^T w - u^T gamma + sum_i c(gamma_i, d_i)
//! ```
//!
//! and `M~ - sum_i c(0, d_i)` is a lower bound on `log Z_p(w, prior)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{check_len, Result};
use crate::math::{exp, ln, map_indexed};
use crate::problem::ProblemStats;
use crate::tilt::{log_partition, tilt_summary, PriorGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub m_tilde: f64,
    /// Lower bound on `log m(y)`.
    pub elbo_evidence: f64,
}

/// Per-coordinate tilt quantities at a given `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateTilts {
    pub log_partition: Vec<f64>,
    pub mean: DVector<f64>,
    pub variance: Vec<f64>,
}

pub fn coordinate_tilts(stats: &ProblemStats, gamma: &DVector<f64>, prior: &PriorGrid) -> Result<CoordinateTilts> {
    check_len("gamma", stats.p, gamma.len())?;
    let per = map_indexed(stats.p, |i| tilt_summary(prior, gamma[i], stats.d[i]));
    Ok(CoordinateTilts {
        log_partition: per.iter().map(|s| s.log_partition).collect(),
        mean: DVector::from_iterator(stats.p, per.iter().map(|s| s.mean)),
        variance: per.iter().map(|s| s.variance).collect(),
    })
}

/// Objective value together with everything the gradients reuse.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub m_tilde: f64,
    pub tilts: CoordinateTilts,
    /// `w - gamma - A u`; the gamma-gradient is this times the tilt variance.
    pub residual: DVector<f64>,
}

pub fn evaluate(stats: &ProblemStats, gamma: &DVector<f64>, prior: &PriorGrid) -> Result<Evaluation> {
    let tilts = coordinate_tilts(stats, gamma, prior)?;
    let au = &stats.a * &tilts.mean;
    let u = &tilts.mean;
    let mut m = 0.0;
    for i in 0..stats.p {
        m += u[i] * (stats.w[i] - gamma[i] - 0.5 * au[i]);
    }
    for c in &tilts.log_partition {
        m += c;
    }
    let residual = &stats.w - gamma - au;
    Ok(Evaluation {
        m_tilde: m,
        tilts,
        residual,
    })
}

impl Evaluation {
    pub fn grad_gamma(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.residual.len(),
            self.residual.iter().zip(&self.tilts.variance).map(|(r, v)| r * v),
        )
    }

    /// `dM~/dp_r` for every atom, treating the weights as free coordinates:
    ///
    /// ```text
    /// dM~/dp_r = sum_i e_ir [ (a_r - u_i) * residual_i + 1 ],
    /// e_ir = exp(a_r gamma_i - a_r^2 d_i / 2 - c(gamma_i, d_i))
    /// ```
    ///
    /// `e_ir` does not involve `p_r`, so atoms with zero weight get the
    /// one-sided derivative.
    pub fn grad_weights(&self, stats: &ProblemStats, gamma: &DVector<f64>, prior: &PriorGrid) -> Vec<f64> {
        let atoms = prior.atoms();
        let k = atoms.len();
        let rows = map_indexed(stats.p, |i| {
            let (g, d, c) = (gamma[i], stats.d[i], self.tilts.log_partition[i]);
            let (u, res) = (self.tilts.mean[i], self.residual[i]);
            atoms
                .iter()
                .map(|&a| exp(a * g - 0.5 * a * a * d - c) * ((a - u) * res + 1.0))
                .collect::<Vec<f64>>()
        });
        let mut grad = vec![0.0; k];
        for row in &rows {
            for (acc, v) in grad.iter_mut().zip(row) {
                *acc += v;
            }
        }
        grad
    }
}

pub fn objective(stats: &ProblemStats, gamma: &DVector<f64>, prior: &PriorGrid) -> Result<ObjectiveValue> {
    let m_tilde = evaluate(stats, gamma, prior)?.m_tilde;
    Ok(ObjectiveValue {
        m_tilde,
        elbo_evidence: evidence_offset(stats) + m_tilde,
    })
}

/// `-(n/2) log(2 pi sigma2) - |y|^2 / (2 sigma2)`.
pub fn evidence_offset(stats: &ProblemStats) -> f64 {
    -0.5 * stats.n as f64 * ln(2.0 * core::f64::consts::PI * stats.sigma2) - stats.y_sq_norm / (2.0 * stats.sigma2)
}

/// `sum_i c(0, d_i)`: the gap between `M~` and the bound on `log Z_p`.
pub fn base_log_partition_sum(stats: &ProblemStats, prior: &PriorGrid) -> f64 {
    stats.d.iter().map(|&d| log_partition(prior, 0.0, d)).sum()
}

pub fn grad_gamma(stats: &ProblemStats, gamma: &DVector<f64>, prior: &PriorGrid) -> Result<DVector<f64>> {
    Ok(evaluate(stats, gamma, prior)?.grad_gamma())
}

pub fn grad_weights(stats: &ProblemStats, gamma: &DVector<f64>, prior: &PriorGrid) -> Result<Vec<f64>> {
    Ok(evaluate(stats, gamma, prior)?.grad_weights(stats, gamma, prior))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_stats;
    use crate::testutil::{random_matrix, random_prior, random_vector, Rng};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    /// Term-by-term objective for arbitrary positive weights (not
    /// necessarily normalized), written straight from the definitions.
    fn m_tilde_oracle(stats: &ProblemStats, gamma: &[f64], atoms: &[f64], weights: &[f64]) -> f64 {
        let p = stats.p;
        let mut c = vec![0.0; p];
        let mut u = vec![0.0; p];
        for i in 0..p {
            let mut z = 0.0;
            let mut m = 0.0;
            for (a, w) in atoms.iter().zip(weights) {
                let e = w * (a * gamma[i] - a * a * stats.d[i] / 2.0).exp();
                z += e;
                m += a * e;
            }
            c[i] = z.ln();
            u[i] = m / z;
        }
        let mut total = 0.0;
        for i in 0..p {
            for j in 0..p {
                total -= 0.5 * u[i] * stats.a[(i, j)] * u[j];
            }
            total += u[i] * stats.w[i] - u[i] * gamma[i] + c[i];
        }
        total
    }

    fn instance(seed: u64, n: usize, p: usize, k: usize) -> (ProblemStats, PriorGrid, DVector<f64>) {
        let mut rng = Rng::new(seed);
        let x = random_matrix(&mut rng, n, p, 1.0 / libm::sqrt(n as f64) * 1.5);
        let y = random_vector(&mut rng, n, 1.0);
        let stats = build_stats(&x, &y, rng.range(0.3, 2.0)).unwrap();
        let prior = random_prior(&mut rng, k);
        let gamma = DVector::from_fn(p, |_, _| rng.range(-5.0, 5.0));
        (stats, prior, gamma)
    }

    #[test]
    fn single_coordinate_exactness() {
        let x = DMatrix::from_element(1, 1, 1.3);
        let y = DVector::from_element(1, 0.4);
        let stats = build_stats(&x, &y, 0.8).unwrap();
        let prior = PriorGrid::new(vec![-1.0, 0.2, 1.0], vec![0.3, 0.5, 0.2]).unwrap();
        let (w, d) = (stats.w[0], stats.d[0]);
        let g = DVector::from_element(1, w);
        let m = objective(&stats, &g, &prior).unwrap().m_tilde;
        assert_relative_eq!(m, log_partition(&prior, w, d), epsilon = 1e-14);
        // Any other gamma gives u (w - gamma) + c(gamma, d).
        let g2 = 0.3;
        let u = tilt_summary(&prior, g2, d).mean;
        let m2 = objective(&stats, &DVector::from_element(1, g2), &prior)
            .unwrap()
            .m_tilde;
        assert_relative_eq!(m2, u * (w - g2) + log_partition(&prior, g2, d), epsilon = 1e-14);
        assert!(m2 <= m);
    }

    #[test]
    fn zero_gamma_substitution() {
        let (stats, prior, _) = instance(4, 20, 3, 4);
        let g = DVector::zeros(3);
        let u = DVector::from_fn(3, |i, _| tilt_summary(&prior, 0.0, stats.d[i]).mean);
        let expected = u.dot(&stats.w) - 0.5 * u.dot(&(&stats.a * &u)) + base_log_partition_sum(&stats, &prior);
        assert_relative_eq!(
            objective(&stats, &g, &prior).unwrap().m_tilde,
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn objective_matches_term_by_term_oracle() {
        let (stats, prior, gamma) = instance(17, 12, 3, 5);
        let m = objective(&stats, &gamma, &prior).unwrap();
        let oracle = m_tilde_oracle(&stats, gamma.as_slice(), prior.atoms(), prior.weights());
        assert!((m.m_tilde - oracle).abs() < 1e-12);
        assert_relative_eq!(m.elbo_evidence, evidence_offset(&stats) + m.m_tilde, epsilon = 1e-12);
    }

    #[test]
    fn point_mass_gradient_vanishes() {
        let (stats, _, gamma) = instance(2, 10, 4, 3);
        let prior = PriorGrid::point_mass(0.3).unwrap();
        assert!(grad_gamma(&stats, &gamma, &prior).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn diagonal_stationary_at_w() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 0.5]));
        let y = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let stats = build_stats(&x, &y, 1.0).unwrap();
        let prior = PriorGrid::new(vec![-1.0, 0.0, 1.0], vec![0.2, 0.5, 0.3]).unwrap();
        let g = grad_gamma(&stats, &stats.w, &prior).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_gamma_matches_finite_differences() {
        let (stats, prior, gamma) = instance(31, 30, 5, 6);
        let g = grad_gamma(&stats, &gamma, &prior).unwrap();
        let h = 1e-6;
        for i in 0..5 {
            let mut gp = gamma.clone();
            gp[i] += h;
            let mut gm = gamma.clone();
            gm[i] -= h;
            let fd = (m_tilde_oracle(&stats, gp.as_slice(), prior.atoms(), prior.weights())
                - m_tilde_oracle(&stats, gm.as_slice(), prior.atoms(), prior.weights()))
                / (2.0 * h);
            assert!((g[i] - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn grad_weights_matches_finite_differences() {
        for (seed, p, k) in [(7, 1, 4), (8, 4, 6)] {
            let (stats, prior, gamma) = instance(seed, 15, p, k);
            let g = grad_weights(&stats, &gamma, &prior).unwrap();
            let h = 1e-6;
            for r in 0..prior.len() {
                let mut wp = prior.weights().to_vec();
                wp[r] += h;
                let mut wm = prior.weights().to_vec();
                wm[r] -= h;
                let fd = (m_tilde_oracle(&stats, gamma.as_slice(), prior.atoms(), &wp)
                    - m_tilde_oracle(&stats, gamma.as_slice(), prior.atoms(), &wm))
                    / (2.0 * h);
                assert!((g[r] - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{r}: {} vs {fd}", g[r]);
            }
            // Directional derivative along a simplex-interior direction.
            let dir: Vec<f64> = (0..prior.len())
                .map(|r| {
                    if r == 0 {
                        1.0
                    } else if r == 1 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let plus: Vec<f64> = prior.weights().iter().zip(&dir).map(|(w, v)| w + h * v).collect();
            let minus: Vec<f64> = prior.weights().iter().zip(&dir).map(|(w, v)| w - h * v).collect();
            let fd = (objective(&stats, &gamma, &prior.with_weights(plus).unwrap())
                .unwrap()
                .m_tilde
                - objective(&stats, &gamma, &prior.with_weights(minus).unwrap())
                    .unwrap()
                    .m_tilde)
                / (2.0 * h);
            let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
            assert!((analytic - fd).abs() <= 1e-5 * fd.abs().max(1e-3));
        }
    }

    #[test]
    fn grad_weights_reflection_symmetry() {
        let x = DMatrix::identity(3, 3);
        let y = DVector::zeros(3);
        let stats = build_stats(&x, &y, 1.0).unwrap();
        let prior = PriorGrid::uniform(crate::tilt::GridSpec {
            lo: -1.0,
            hi: 1.0,
            k: 7,
        })
        .unwrap();
        let g = grad_weights(&stats, &DVector::zeros(3), &prior).unwrap();
        for r in 0..7 {
            assert_relative_eq!(g[r], g[6 - r], epsilon = 1e-12);
        }
    }
}
