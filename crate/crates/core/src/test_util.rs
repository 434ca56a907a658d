//! Shared helpers for unit tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensemble::Ensemble;

pub fn random_ensemble(rng: &mut impl Rng, n_particles: usize, n: usize, m: usize) -> Ensemble {
    let data = DMatrix::from_fn(n_particles, n + m, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ensemble::new(n, m, data).unwrap()
}

/// Ensemble with correlated x/y blocks so the gain is nontrivial.
pub fn correlated_ensemble(rng: &mut impl Rng, n_particles: usize, n: usize, m: usize) -> Ensemble {
    let ys = DMatrix::from_fn(n_particles, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mix = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = DMatrix::from_fn(n_particles, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let xs = &ys * mix + noise;
    Ensemble::from_blocks(&xs, &ys).unwrap()
}
