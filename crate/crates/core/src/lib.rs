//! Likelihood-free Bayesian inversion with affine ensemble updates.
//!
//! Given joint particles `(x_i, y_i) ~ π` and an observation `y⋆`, the crate
//! builds and applies affine conditioning maps `x ↦ Ax + By + c` — the
//! Ensemble Kalman Update and its deterministic square-root competitors —
//! and scores the resulting analysis ensembles against exact posterior
//! samples with an exact discrete 2-Wasserstein solver. Structured joint-law
//! samplers, symmetry diagnostics, and a seeded Monte Carlo experiment
//! harness round out the toolkit.

pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod generators;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod updates;
pub mod wasserstein;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
