//! The joint ensemble container and its empirical moments.
//!
//! An [`Ensemble`] holds `N` particles `(x_i, y_i)` with `x ∈ Rⁿ`, `y ∈ Rᵐ`;
//! [`moments`] computes the sample means, the unbiased (`1/(N−1)`) covariance
//! blocks, the Kalman gain `K = Σ_XY Σ_Y†`, and the conditional covariance
//! `Σ_X|Y = Σ_X − Σ_XY Σ_Y† Σ_YX`. The gain is computed once here and cached
//! so every update map consumes the same `K`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// `N` joint particles, one per row, stored as `[x | y]` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    state_dim: usize,
    obs_dim: usize,
    data: DMatrix<f64>,
}

impl Ensemble {
    /// Wraps an `N × (n + m)` row-per-particle matrix.
    pub fn new(state_dim: usize, obs_dim: usize, data: DMatrix<f64>) -> Result<Self> {
        if state_dim == 0 || obs_dim == 0 {
            return Err(Error::InvalidInput("state and observation dimensions must be >= 1".into()));
        }
        if data.nrows() == 0 {
            return Err(Error::InvalidInput("ensemble must contain at least one particle".into()));
        }
        if data.ncols() != state_dim + obs_dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} columns (n + m), got {}",
                state_dim + obs_dim,
                data.ncols()
            )));
        }
        linalg::ensure_finite(&data, "ensemble")?;
        Ok(Self {
            state_dim,
            obs_dim,
            data,
        })
    }

    /// Builds from separate `N × n` state and `N × m` observation blocks.
    pub fn from_blocks(xs: &DMatrix<f64>, ys: &DMatrix<f64>) -> Result<Self> {
        if xs.nrows() != ys.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "state block has {} rows, observation block has {}",
                xs.nrows(),
                ys.nrows()
            )));
        }
        let mut data = DMatrix::zeros(xs.nrows(), xs.ncols() + ys.ncols());
        data.view_mut((0, 0), (xs.nrows(), xs.ncols())).copy_from(xs);
        data.view_mut((0, xs.ncols()), (ys.nrows(), ys.ncols())).copy_from(ys);
        Ensemble::new(xs.ncols(), ys.ncols(), data)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // N >= 1 by construction
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `N × n` state block (copied).
    pub fn states(&self) -> DMatrix<f64> {
        self.data.columns(0, self.state_dim).into()
    }

    /// `N × m` observation block (copied).
    pub fn observations(&self) -> DMatrix<f64> {
        self.data.columns(self.state_dim, self.obs_dim).into()
    }

    pub fn state(&self, i: usize) -> DVector<f64> {
        self.data.row(i).columns(0, self.state_dim).transpose()
    }

    pub fn observation(&self, i: usize) -> DVector<f64> {
        self.data.row(i).columns(self.state_dim, self.obs_dim).transpose()
    }
}

/// Sample means, unbiased covariance blocks, conditional covariance, and the
/// cached Kalman gain of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    pub cov_x: DMatrix<f64>,
    pub cov_y: DMatrix<f64>,
    pub cov_xy: DMatrix<f64>,
    pub cov_x_given_y: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

impl Moments {
    /// Assembles moments from externally supplied blocks (e.g. population
    /// quantities), deriving the gain and conditional covariance.
    pub fn from_blocks(
        mean_x: DVector<f64>,
        mean_y: DVector<f64>,
        cov_x: DMatrix<f64>,
        cov_y: DMatrix<f64>,
        cov_xy: DMatrix<f64>,
    ) -> Result<Self> {
        let n = mean_x.len();
        let m = mean_y.len();
        if cov_x.shape() != (n, n) || cov_y.shape() != (m, m) || cov_xy.shape() != (n, m) {
            return Err(Error::DimensionMismatch("covariance blocks do not match mean dimensions".into()));
        }
        linalg::ensure_finite_vec(&mean_x, "mean_x")?;
        linalg::ensure_finite_vec(&mean_y, "mean_y")?;
        linalg::ensure_finite(&cov_x, "cov_x")?;
        linalg::ensure_finite(&cov_y, "cov_y")?;
        linalg::ensure_finite(&cov_xy, "cov_xy")?;
        let cov_x = linalg::symmetrize(&cov_x);
        let cov_y = linalg::symmetrize(&cov_y);
        let gain = &cov_xy * linalg::pinv_auto(&cov_y)?;
        let cov_x_given_y = linalg::symmetrize(&(&cov_x - &gain * cov_xy.transpose()));
        Ok(Moments {
            mean_x,
            mean_y,
            cov_x,
            cov_y,
            cov_xy,
            cov_x_given_y,
            gain,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.mean_x.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.mean_y.len()
    }
}

/// Empirical moments of an ensemble; requires `N ≥ 2`.
pub fn moments(e: &Ensemble) -> Result<Moments> {
    let n_particles = e.len();
    if n_particles < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: n_particles,
        });
    }
    let xs = e.states();
    let ys = e.observations();
    let mean_x = column_means(&xs);
    let mean_y = column_means(&ys);
    let xc = center(&xs, &mean_x);
    let yc = center(&ys, &mean_y);
    let norm = 1.0 / (n_particles as f64 - 1.0);
    let cov_x = linalg::symmetrize(&(xc.transpose() * &xc * norm));
    let cov_y = linalg::symmetrize(&(yc.transpose() * &yc * norm));
    let cov_xy = xc.transpose() * &yc * norm;
    Moments::from_blocks(mean_x, mean_y, cov_x, cov_y, cov_xy)
}

/// Recomputes `K = Σ_XY Σ_Y†` from the blocks; idempotent against the cached gain.
pub fn kalman_gain(m: &Moments) -> Result<DMatrix<f64>> {
    Ok(&m.cov_xy * linalg::pinv_auto(&m.cov_y)?)
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_fn(m.ncols(), |j, _| m.column(j).sum() / n)
}

fn center(m: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - mean[j])
}
