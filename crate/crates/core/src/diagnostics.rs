//! Numerical probes of distributional symmetry and posterior structure.
//!
//! * [`cov_rank_check`] — smallest eigenvalue and numerical rank of the
//!   sample covariance (degenerate-support detection).
//! * [`cyclic_symmetry_stat`] — empirical-characteristic-function gap
//!   `max_t |φ̂(t) − φ̂(R₂π/kᵀ t)|` over a frequency grid, a diagnostic for
//!   k-fold rotational symmetry of 2-D samples. This is a descriptive
//!   statistic, not a calibrated hypothesis test.
//! * [`translation_residual`] — W₂ distance after mean-matching two sample
//!   clouds; small residuals are evidence the clouds differ only by a
//!   translation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::wasserstein::{w2_exact, PointCloud};

/// Aggregated diagnostic output (see the `diagnose` CLI subcommand).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub smallest_eigenvalue: f64,
    pub numerical_rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cyclic_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cyc_statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translation_shift: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translation_residual: Option<f64>,
}

/// Eigenvalues of the sample covariance: returns `(λ_min, rank)` where the
/// rank counts eigenvalues above `tol · λ_max`.
pub fn cov_rank_check(samples: &DMatrix<f64>, tol: f64) -> Result<(f64, usize)> {
    if samples.nrows() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.nrows(),
        });
    }
    linalg::ensure_finite(samples, "samples")?;
    let n = samples.nrows() as f64;
    let mean = DVector::from_fn(samples.ncols(), |j, _| samples.column(j).sum() / n);
    let centered = DMatrix::from_fn(samples.nrows(), samples.ncols(), |i, j| samples[(i, j)] - mean[j]);
    let cov = linalg::symmetrize(&(centered.transpose() * &centered / (n - 1.0)));
    let eig = linalg::sym_eigen(&cov)?;
    let lambda_max = eig.eigenvalues.max().max(0.0);
    let rank = eig.eigenvalues.iter().filter(|&&l| l > tol * lambda_max).count();
    Ok((eig.eigenvalues.min(), rank))
}

/// Default ECF grid: 64 directions uniform on the circle times radii
/// {0.25, 0.5, 1, 2}.
pub fn default_frequency_grid() -> Vec<[f64; 2]> {
    let mut grid = Vec::with_capacity(64 * 4);
    for d in 0..64 {
        let angle = std::f64::consts::TAU * d as f64 / 64.0;
        for radius in [0.25, 0.5, 1.0, 2.0] {
            grid.push([radius * angle.cos(), radius * angle.sin()]);
        }
    }
    grid
}

/// Empirical characteristic function of 2-D samples at frequency `t`.
fn ecf(samples: &DMatrix<f64>, shift: &[f64; 2], t: [f64; 2]) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..samples.nrows() {
        let arg = t[0] * (samples[(i, 0)] - shift[0]) + t[1] * (samples[(i, 1)] - shift[1]);
        re += arg.cos();
        im += arg.sin();
    }
    let n = samples.nrows() as f64;
    (re / n, im / n)
}

/// `max_t |φ̂(t) − φ̂(R_{2π/k}ᵀ t)|` over the grid. Samples are mean-centered
/// first unless `centered` is false (useful for atom examples). `k = 1`
/// rotates by 2π, i.e. the identity, and returns exactly 0.
pub fn cyclic_symmetry_stat(
    samples: &DMatrix<f64>,
    order: usize,
    grid: &[[f64; 2]],
    centered: bool,
) -> Result<f64> {
    if samples.ncols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "cyclic symmetry statistic needs 2-D samples, got dimension {}",
            samples.ncols()
        )));
    }
    if samples.nrows() == 0 {
        return Err(Error::InvalidInput("no samples".into()));
    }
    if order == 0 {
        return Err(Error::InvalidInput("cyclic order must be >= 1".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("frequency grid is empty".into()));
    }
    linalg::ensure_finite(samples, "samples")?;
    if order == 1 {
        return Ok(0.0);
    }
    let shift = if centered {
        let n = samples.nrows() as f64;
        [samples.column(0).sum() / n, samples.column(1).sum() / n]
    } else {
        [0.0, 0.0]
    };
    let angle = std::f64::consts::TAU / order as f64;
    let (c, s) = (angle.cos(), angle.sin());
    let mut worst = 0.0_f64;
    for &t in grid {
        // Rᵀ t for R the counterclockwise rotation by 2π/k.
        let rt = [c * t[0] + s * t[1], -s * t[0] + c * t[1]];
        let (re_a, im_a) = ecf(samples, &shift, t);
        let (re_b, im_b) = ecf(samples, &shift, rt);
        let gap = ((re_a - re_b).powi(2) + (im_a - im_b).powi(2)).sqrt();
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Mean-matching translation diagnostic: returns the shift
/// `mean(b) − mean(a)` and the exact W₂ distance between the shifted first
/// cloud and the second.
pub fn translation_residual(a: &PointCloud, b: &PointCloud) -> Result<(DVector<f64>, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "clouds have dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let col_mean = |c: &PointCloud| {
        DVector::from_fn(c.dim(), |j, _| c.points().column(j).sum() / c.len() as f64)
    };
    let shift = col_mean(b) - col_mean(a);
    let residual = w2_exact(&a.translate(&shift)?, b)?.distance;
    Ok((shift, residual))
}
