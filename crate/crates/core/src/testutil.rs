//! Seeded helpers for unit tests.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::tilt::PriorGrid;

pub(crate) struct Rng(ChaCha8Rng);

impl Rng {
    pub(crate) fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub(crate) fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub(crate) fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub(crate) fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }
}

/// Random prior on `k` sorted atoms in [-1, 1], weights bounded away from 0.
pub(crate) fn random_prior(rng: &mut Rng, k: usize) -> PriorGrid {
    let mut atoms: Vec<f64> = (0..k).map(|_| rng.range(-1.0, 1.0)).collect();
    atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    atoms.dedup();
    let raw: Vec<f64> = (0..atoms.len()).map(|_| rng.range(0.05, 1.0)).collect();
    PriorGrid::normalized(atoms, raw).unwrap()
}

pub(crate) fn random_matrix(rng: &mut Rng, n: usize, p: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| scale * rng.normal())
}

pub(crate) fn random_vector(rng: &mut Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.normal())
}
