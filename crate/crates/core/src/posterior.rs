//! Product-form approximate posterior built from a fitted prior and tilts.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{check_len, Error, Result};
use crate::tilt::{quantile, tilt_measure, PriorGrid, TiltedMeasure};

/// Coordinate `i` is the tilt `(gamma_i, d_i)` of the prior. Carries no
/// covariances between coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorProduct {
    pub components: Vec<TiltedMeasure>,
    pub prior: PriorGrid,
    pub gamma: DVector<f64>,
    pub d: DVector<f64>,
}

/// A two-sided interval `(lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

pub fn build_posterior(prior: &PriorGrid, gamma: &DVector<f64>, d: &DVector<f64>) -> Result<PosteriorProduct> {
    check_len("precisions", gamma.len(), d.len())?;
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("precisions must be positive".into()));
    }
    let components = gamma
        .iter()
        .zip(d.iter())
        .map(|(&g, &di)| tilt_measure(prior, g, di))
        .collect();
    Ok(PosteriorProduct {
        components,
        prior: prior.clone(),
        gamma: gamma.clone(),
        d: d.clone(),
    })
}

impl PosteriorProduct {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

pub fn posterior_mean(post: &PosteriorProduct) -> DVector<f64> {
    DVector::from_iterator(post.len(), post.components.iter().map(TiltedMeasure::mean))
}

/// `(q_{alpha/2} - eps, q_{1 - alpha/2} + eps)` for every coordinate.
pub fn credible_intervals(post: &PosteriorProduct, alpha: f64, eps: f64) -> Vec<Interval> {
    post.components
        .iter()
        .map(|m| Interval {
            lower: quantile(m, alpha / 2.0) - eps,
            upper: quantile(m, 1.0 - alpha / 2.0) + eps,
        })
        .collect()
}

/// Prior mass within `eps` of zero.
pub fn null_proportion(prior: &PriorGrid, eps: f64) -> f64 {
    prior
        .atoms()
        .iter()
        .zip(prior.weights())
        .filter(|(a, _)| a.abs() <= eps)
        .map(|(_, w)| w)
        .sum::<f64>()
        .min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_prior, Rng};
    use crate::tilt::log_partition;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_gamma_gives_base_tilts() {
        let mut rng = Rng::new(4);
        let prior = random_prior(&mut rng, 5);
        let d = DVector::from_vec(vec![0.5, 1.0, 3.0]);
        let post = build_posterior(&prior, &DVector::zeros(3), &d).unwrap();
        for (i, comp) in post.components.iter().enumerate() {
            assert_eq!(comp, &tilt_measure(&prior, 0.0, d[i]));
        }
    }

    #[test]
    fn half_precision_tilt_balances() {
        let prior = PriorGrid::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let post = build_posterior(&prior, &DVector::from_element(1, 1.1), &DVector::from_element(1, 2.2)).unwrap();
        let q = post.components[0].probs();
        assert_relative_eq!(q[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(q[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn matches_direct_normalization() {
        let mut rng = Rng::new(6);
        let prior = random_prior(&mut rng, 4);
        let gamma = DVector::from_vec(vec![-1.5, 0.2, 2.5]);
        let d = DVector::from_vec(vec![0.7, 1.2, 2.0]);
        let post = build_posterior(&prior, &gamma, &d).unwrap();
        for i in 0..3 {
            let raw: Vec<f64> = prior
                .atoms()
                .iter()
                .zip(prior.weights())
                .map(|(a, w)| w * (a * gamma[i] - a * a * d[i] / 2.0).exp())
                .collect();
            let z: f64 = raw.iter().sum();
            let q = post.components[i].probs();
            for r in 0..raw.len() {
                assert!((q[r] - raw[r] / z).abs() < 1e-12);
            }
            assert!((z.ln() - log_partition(&prior, gamma[i], d[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let prior = PriorGrid::point_mass(0.0).unwrap();
        assert!(build_posterior(&prior, &DVector::zeros(2), &DVector::from_element(3, 1.0)).is_err());
        assert!(build_posterior(&prior, &DVector::zeros(2), &DVector::from_vec(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn mean_examples() {
        let sym = PriorGrid::new(vec![-1.0, 0.0, 1.0], vec![0.3, 0.4, 0.3]).unwrap();
        let post = build_posterior(&sym, &DVector::zeros(2), &DVector::from_element(2, 1.3)).unwrap();
        assert!(posterior_mean(&post).iter().all(|m| m.abs() < 1e-15));

        let pm = PriorGrid::point_mass(0.4).unwrap();
        let post = build_posterior(&pm, &DVector::from_vec(vec![3.0, -2.0]), &DVector::from_element(2, 1.0)).unwrap();
        assert_eq!(posterior_mean(&post).as_slice(), &[0.4, 0.4]);
    }

    #[test]
    fn interval_examples() {
        let sym = PriorGrid::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let post = build_posterior(&sym, &DVector::zeros(1), &DVector::from_element(1, 1.0)).unwrap();
        let iv = credible_intervals(&post, 0.05, 0.0)[0];
        assert_eq!((iv.lower, iv.upper), (-1.0, 1.0));

        let pm = PriorGrid::point_mass(0.25).unwrap();
        let post = build_posterior(&pm, &DVector::from_element(1, 4.0), &DVector::from_element(1, 1.0)).unwrap();
        let iv = credible_intervals(&post, 0.3, 0.1)[0];
        assert_eq!((iv.lower, iv.upper), (0.25 - 0.1, 0.25 + 0.1));
    }

    #[test]
    fn null_proportion_examples() {
        let prior = PriorGrid::new(vec![-1.0, 0.0, 0.5, 1.0], vec![0.2, 0.5, 0.1, 0.2]).unwrap();
        assert_eq!(null_proportion(&prior, 0.0), 0.5);
        assert_eq!(null_proportion(&prior, 0.5), 0.6);
        assert_relative_eq!(null_proportion(&prior, 1.0), 1.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn interval_and_mean_properties(
            seed in any::<u64>(),
            k in 2usize..8,
            g in -6.0f64..6.0,
            d in 0.1f64..5.0,
            alpha in 0.001f64..0.999,
        ) {
            let prior = random_prior(&mut Rng::new(seed), k);
            let post = build_posterior(&prior, &DVector::from_element(1, g), &DVector::from_element(1, d)).unwrap();
            let iv = credible_intervals(&post, alpha, 0.0)[0];
            prop_assert!(iv.lower <= iv.upper);
            // Mass of the closed interval is at least 1 - alpha.
            let comp = &post.components[0];
            let mass: f64 = comp.atoms.iter().zip(comp.probs()).filter(|(a, _)| iv.contains(**a)).map(|(_, q)| q).sum();
            prop_assert!(mass >= 1.0 - alpha - 1e-12);
            let m = posterior_mean(&post)[0];
            prop_assert!(m >= prior.atoms()[0] - 1e-12 && m <= prior.atoms()[prior.len() - 1] + 1e-12);
        }

        #[test]
        fn null_proportion_monotone(seed in any::<u64>(), k in 1usize..10, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
            let prior = random_prior(&mut Rng::new(seed), k);
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(null_proportion(&prior, lo) <= null_proportion(&prior, hi));
        }
    }
}
