//! Affine conditioning maps and their application to ensembles.
//!
//! All maps share the representation `x ↦ Ax + By + c`:
//!
//! * [`enku_map`] — the Ensemble Kalman Update `x + K(y⋆ − y)` with gain
//!   `K = Σ_XY Σ_Y†`.
//! * [`ld_map`] — the deterministic (y-independent) square-root update
//!   `√Σ_X|Y · Σ_X^{†/2} (x − m_X) + K(y⋆ − m_Y) + m_X`.
//! * [`lot_map`] — the optimal-transport square-root update with the
//!   symmetric PSD factor `Σ_X^{†/2} (√Σ_X Σ_X|Y √Σ_X)^{1/2} Σ_X^{†/2}`.
//!
//! Both square-root maps use principal roots throughout and pseudoinverse
//! roots when `Σ_X` is singular, which keeps degenerate ensembles usable.
//! [`eakf_svd_update`] implements the SVD-based ensemble adjustment under a
//! linear observation model, and [`etkf_transform`] builds the ensemble-space
//! projector whose action on anomalies coincides with the EnKU.

use nalgebra::{DMatrix, DVector};

use crate::ensemble::{Ensemble, Moments};
use crate::error::{Error, Result};
use crate::linalg;
use crate::wasserstein::PointCloud;

/// An affine map `(x, y) ↦ Ax + By + c` from joint space to state space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConditioningMap {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DVector<f64>,
}

impl AffineConditioningMap {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let n = c.len();
        if a.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "A must be {n}x{n}, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B must have {n} rows, got {}",
                b.nrows()
            )));
        }
        linalg::ensure_finite(&a, "A")?;
        linalg::ensure_finite(&b, "B")?;
        linalg::ensure_finite_vec(&c, "c")?;
        Ok(Self { a, b, c })
    }

    pub fn state_dim(&self) -> usize {
        self.c.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    /// Evaluates the map at a single particle.
    pub fn evaluate(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * y + &self.c
    }
}

/// The x-marginal of a transported ensemble: `N` analysis particles in `Rⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisEnsemble {
    particles: DMatrix<f64>,
}

impl AnalysisEnsemble {
    pub fn new(particles: DMatrix<f64>) -> Result<Self> {
        if particles.nrows() == 0 || particles.ncols() == 0 {
            return Err(Error::InvalidInput("analysis ensemble must be non-empty".into()));
        }
        linalg::ensure_finite(&particles, "analysis ensemble")?;
        Ok(Self { particles })
    }

    pub fn len(&self) -> usize {
        self.particles.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state_dim(&self) -> usize {
        self.particles.ncols()
    }

    /// `N × n` particle matrix, one analysis state per row.
    pub fn particles(&self) -> &DMatrix<f64> {
        &self.particles
    }

    pub fn mean(&self) -> DVector<f64> {
        let n = self.particles.nrows() as f64;
        DVector::from_fn(self.particles.ncols(), |j, _| self.particles.column(j).sum() / n)
    }

    /// Unbiased sample covariance of the analysis particles.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: n });
        }
        let mean = self.mean();
        let centered = DMatrix::from_fn(n, self.state_dim(), |i, j| self.particles[(i, j)] - mean[j]);
        Ok(linalg::symmetrize(&(centered.transpose() * &centered / (n as f64 - 1.0))))
    }

    pub fn into_point_cloud(self) -> Result<PointCloud> {
        PointCloud::new(self.particles)
    }
}

fn check_y_star(mom: &Moments, y_star: &DVector<f64>) -> Result<()> {
    if y_star.len() != mom.obs_dim() {
        return Err(Error::DimensionMismatch(format!(
            "y_star has dimension {}, expected {}",
            y_star.len(),
            mom.obs_dim()
        )));
    }
    linalg::ensure_finite_vec(y_star, "y_star")
}

/// Ensemble Kalman Update: `A = I`, `B = −K`, `c = K y⋆`.
pub fn enku_map(mom: &Moments, y_star: &DVector<f64>) -> Result<AffineConditioningMap> {
    check_y_star(mom, y_star)?;
    let n = mom.state_dim();
    AffineConditioningMap::new(DMatrix::identity(n, n), -&mom.gain, &mom.gain * y_star)
}

fn square_root_offset(
    mom: &Moments,
    y_star: &DVector<f64>,
    a: &DMatrix<f64>,
) -> DVector<f64> {
    -(a * &mom.mean_x) + &mom.gain * (y_star - &mom.mean_y) + &mom.mean_x
}

/// Deterministic square-root update with `A = √Σ_X|Y · Σ_X^{†/2}` and `B = 0`.
pub fn ld_map(mom: &Moments, y_star: &DVector<f64>) -> Result<AffineConditioningMap> {
    check_y_star(mom, y_star)?;
    let a = linalg::psd_sqrt(&mom.cov_x_given_y)? * linalg::psd_sqrt_pinv(&mom.cov_x)?;
    let c = square_root_offset(mom, y_star, &a);
    AffineConditioningMap::new(a, DMatrix::zeros(mom.state_dim(), mom.obs_dim()), c)
}

/// Optimal-transport square-root update with the symmetric PSD factor
/// `A = Σ_X^{†/2} (√Σ_X Σ_X|Y √Σ_X)^{1/2} Σ_X^{†/2}` and `B = 0`.
pub fn lot_map(mom: &Moments, y_star: &DVector<f64>) -> Result<AffineConditioningMap> {
    check_y_star(mom, y_star)?;
    let root_x = linalg::psd_sqrt(&mom.cov_x)?;
    let inv_root_x = linalg::psd_sqrt_pinv(&mom.cov_x)?;
    let inner = linalg::psd_sqrt(&linalg::symmetrize(&(&root_x * &mom.cov_x_given_y * &root_x)))?;
    let a = linalg::symmetrize(&(&inv_root_x * inner * &inv_root_x));
    let c = square_root_offset(mom, y_star, &a);
    AffineConditioningMap::new(a, DMatrix::zeros(mom.state_dim(), mom.obs_dim()), c)
}

/// Transports every particle: row `i` becomes `A x_i + B y_i + c`.
pub fn apply_map(map: &AffineConditioningMap, e: &Ensemble) -> Result<AnalysisEnsemble> {
    if map.state_dim() != e.state_dim() || map.obs_dim() != e.obs_dim() {
        return Err(Error::DimensionMismatch(format!(
            "map is ({}, {}), ensemble is ({}, {})",
            map.state_dim(),
            map.obs_dim(),
            e.state_dim(),
            e.obs_dim()
        )));
    }
    // Row-major particle blocks: X A' + Y B' + 1 c'.
    let xs = e.states();
    let ys = e.observations();
    let mut out = xs * map.a.transpose() + ys * map.b.transpose();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            out[(i, j)] += map.c[j];
        }
    }
    AnalysisEnsemble::new(out)
}

/// Centered matrix whose columns are particles: `n × N`.
fn anomaly_columns(block: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n_particles = block.nrows() as f64;
    let mean = DVector::from_fn(block.ncols(), |j, _| block.column(j).sum() / n_particles);
    let centered = DMatrix::from_fn(block.ncols(), block.nrows(), |i, j| block[(j, i)] - mean[i]);
    (mean, centered)
}

/// Ensemble-space projector `T̂' = I_N − Ŷᶜᵀ (Ŷᶜ Ŷᶜᵀ)† Ŷᶜ` built from the
/// centered observation matrix; symmetric and idempotent. Its action on the
/// state anomalies reproduces the EnKU anomaly update.
pub fn etkf_transform(e: &Ensemble) -> Result<DMatrix<f64>> {
    let n_particles = e.len();
    if n_particles < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_particles });
    }
    let (_, yc) = anomaly_columns(&e.observations());
    let gram = &yc * yc.transpose();
    let projector = yc.transpose() * linalg::pinv_auto(&gram)? * &yc;
    Ok(linalg::symmetrize(&(DMatrix::identity(n_particles, n_particles) - projector)))
}

/// SVD-based ensemble adjustment update under the linear model
/// `Y = HX + ξ`, `Cov(ξ) = Γ` nonsingular.
///
/// The anomaly transform is assembled from the SVD `F G Uᵀ` of the
/// √(N−1)-normalized forecast anomalies and the eigendecomposition `C D Cᵀ`
/// of their observation-space Gram matrix, with eigenvalues descending so
/// null-space eigenvectors occupy the final columns. The mean moves by the
/// Kalman formula `m_a = m_f + K(y⋆ − H m_f)`, and the analysis covariance
/// matches `Ĉ_f − Ĉ_f Hᵀ (H Ĉ_f Hᵀ + Γ)⁻¹ H Ĉ_f`.
pub fn eakf_svd_update(
    forecast: &DMatrix<f64>,
    h: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    y_star: &DVector<f64>,
) -> Result<AnalysisEnsemble> {
    let n_particles = forecast.nrows();
    let n = forecast.ncols();
    let m = h.nrows();
    if n_particles < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_particles });
    }
    linalg::ensure_finite(forecast, "forecast")?;
    if h.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "H must have {n} columns, got {}",
            h.ncols()
        )));
    }
    if gamma.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "Gamma must be {m}x{m}, got {}x{}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    if y_star.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "y_star has dimension {}, expected {m}",
            y_star.len()
        )));
    }
    linalg::ensure_finite(h, "H")?;
    linalg::ensure_finite(gamma, "Gamma")?;
    linalg::ensure_finite_vec(y_star, "y_star")?;
    if linalg::numerical_rank(gamma, linalg::default_rtol(m, m))? < m {
        return Err(Error::InvalidInput("Gamma is singular".into()));
    }
    let gamma_inv = linalg::symmetrize(gamma)
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("Gamma is singular".into()))?;

    let (mean_f, xc) = anomaly_columns(forecast);
    let scale = 1.0 / (n_particles as f64 - 1.0).sqrt();
    let z = &xc * scale;

    let (f, g, _u) = linalg::svd(&z)?;
    let cutoff = linalg::default_rtol(n, n_particles) * g.max();
    let rank = g.iter().filter(|&&s| s > cutoff && s > 0.0).count();

    let cov_f = &z * z.transpose();
    let innovation_cov = linalg::symmetrize(&(h * &cov_f * h.transpose() + gamma));
    let innovation_inv = innovation_cov
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("H Ĉ_f Hᵀ + Γ is singular".into()))?;
    let gain = &cov_f * h.transpose() * innovation_inv;
    let mean_a = &mean_f + &gain * (y_star - h * &mean_f);

    let mut analysis = DMatrix::zeros(n_particles, n);
    if rank > 0 {
        let f_r: DMatrix<f64> = f.columns(0, rank).into();
        let g_r: Vec<f64> = (0..rank).map(|i| g[i]).collect();
        // Observation-space Gram matrix of the retained anomaly directions.
        let hf = h * &f_r;
        let mut gram = linalg::symmetrize(&(hf.transpose() * &gamma_inv * hf));
        for i in 0..rank {
            for j in 0..rank {
                gram[(i, j)] *= g_r[i] * g_r[j];
            }
        }
        let eig = linalg::sym_eigen(&gram)?;
        // A = F_r G_r C (I + D)^{-1/2} G_r^{-1} F_rᵀ on the anomaly support.
        let mut left = DMatrix::zeros(n, rank);
        for j in 0..rank {
            let damp = 1.0 / (1.0 + eig.eigenvalues[j].max(0.0)).sqrt();
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..rank {
                    acc += f_r[(i, k)] * g_r[k] * eig.eigenvectors[(k, j)];
                }
                left[(i, j)] = acc * damp;
            }
        }
        let mut right = DMatrix::zeros(rank, n);
        for i in 0..rank {
            for j in 0..n {
                right[(i, j)] = f_r[(j, i)] / g_r[i];
            }
        }
        let adjust = left * right;
        let transported = adjust * &xc;
        for i in 0..n_particles {
            for j in 0..n {
                analysis[(i, j)] = mean_a[j] + transported[(j, i)];
            }
        }
    } else {
        for i in 0..n_particles {
            for j in 0..n {
                analysis[(i, j)] = mean_a[j];
            }
        }
    }
    AnalysisEnsemble::new(analysis)
}
