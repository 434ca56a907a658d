//! Dense linear-algebra kernels shared by the update maps: Moore–Penrose
//! pseudoinverse, principal PSD square roots, column-space projectors, and
//! sorted SVD / symmetric eigendecompositions.
//!
//! Backed by nalgebra's factorizations; every entry point validates
//! finiteness and returns descending-order spectra. Symmetric inputs are
//! symmetrized as `(M + Mᵀ)/2` before eigendecomposition to suppress
//! round-off asymmetry, and symmetric spectra always come from the dedicated
//! symmetric solver so they stay real.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and orthonormal eigenvectors in matching columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Reassembles `V diag(f(λ)) Vᵀ`, mapping each eigenvalue through `f`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * f(self.eigenvalues[j]));
        symmetrize(&(&scaled * v.transpose()))
    }
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains a non-finite entry")))
    }
}

pub(crate) fn ensure_finite_vec(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains a non-finite entry")))
    }
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Relative asymmetry cutoff used when an operation requires a symmetric input.
fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn require_square_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let tol = 1e-8 * (1.0 + max_abs(m));
    if asymmetry(m) > tol {
        return Err(Error::InvalidInput(format!(
            "{what} is not symmetric within tolerance (worst off-diagonal gap {:.3e})",
            asymmetry(m)
        )));
    }
    Ok(())
}

/// Default relative tolerance for rank decisions: `ε · max(rows, cols)`,
/// applied as a multiple of the largest singular value.
pub fn default_rtol(rows: usize, cols: usize) -> f64 {
    f64::EPSILON * rows.max(cols) as f64
}

/// Eigenvalue clamping tolerance for nominally-PSD matrices: sample
/// covariances of near-degenerate ensembles produce tiny negative
/// eigenvalues that are round-off, not indefiniteness.
pub fn psd_tol(lambda_max: f64) -> f64 {
    1e-10 * lambda_max.max(1.0)
}

/// Symmetric eigendecomposition with a descending spectrum.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    ensure_finite(m, "matrix")?;
    require_square_symmetric(m, "matrix")?;
    let eig = symmetrize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Thin SVD `M = U diag(S) Vᵀ` with singular values sorted descending.
pub fn svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    ensure_finite(m, "matrix")?;
    let decomp = m.clone().svd(true, true);
    let u = decomp.u.expect("requested U");
    let v_t = decomp.v_t.expect("requested Vᵀ");
    let s = decomp.singular_values;
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let sorted_s = DVector::from_fn(k, |i, _| s[order[i]]);
    let mut sorted_u = DMatrix::zeros(u.nrows(), k);
    let mut sorted_v = DMatrix::zeros(v_t.ncols(), k);
    for (dst, &src) in order.iter().enumerate() {
        sorted_u.set_column(dst, &u.column(src));
        sorted_v.set_column(dst, &v_t.row(src).transpose());
    }
    Ok((sorted_u, sorted_s, sorted_v))
}

/// Moore–Penrose pseudoinverse; singular values below `rtol · σ_max` are
/// treated as zero.
pub fn pinv(m: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    if rtol < 0.0 || !rtol.is_finite() {
        return Err(Error::InvalidInput(format!("rtol must be finite and >= 0, got {rtol}")));
    }
    let (u, s, v) = svd(m)?;
    let cutoff = rtol * s.max();
    let k = s.len();
    let mut scaled_v = v;
    for j in 0..k {
        let inv = if s[j] > cutoff && s[j] > 0.0 { 1.0 / s[j] } else { 0.0 };
        scaled_v.column_mut(j).scale_mut(inv);
    }
    Ok(scaled_v * u.transpose())
}

/// Pseudoinverse with the default rank tolerance.
pub fn pinv_auto(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    pinv(m, default_rtol(m.nrows(), m.ncols()))
}

/// Count of singular values above `rtol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rtol: f64) -> Result<usize> {
    let (_, s, _) = svd(m)?;
    let cutoff = rtol * s.max();
    Ok(s.iter().filter(|&&sv| sv > cutoff && sv > 0.0).count())
}

/// Principal symmetric square root of a PSD matrix. Eigenvalues within
/// `-psd_tol` of zero are clamped; anything more negative is an error.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    psd_spectral_map(m, f64::sqrt)
}

/// `√(M†)`: principal root of the pseudoinverse of a PSD matrix.
pub fn psd_sqrt_pinv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rtol = default_rtol(m.nrows(), m.ncols());
    let eig = psd_clamped_eigen(m)?;
    let cutoff = rtol * eig.eigenvalues.max().max(0.0);
    Ok(eig.reassemble(|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 }))
}

fn psd_spectral_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = psd_clamped_eigen(m)?;
    Ok(eig.reassemble(f))
}

/// Spectrum of a nominally-PSD matrix with round-off negatives clamped to zero.
fn psd_clamped_eigen(m: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let mut eig = sym_eigen(m)?;
    let lambda_max = eig.eigenvalues.max().max(0.0);
    let tol = psd_tol(lambda_max);
    for l in eig.eigenvalues.iter_mut() {
        if *l < -tol {
            return Err(Error::NotPsd(format!(
                "eigenvalue {l:.6e} below -{tol:.3e}"
            )));
        }
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    Ok(eig)
}

/// Orthogonal projector `P = M M†` onto the column space of `M`.
pub fn col_projector(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m * pinv_auto(m)?;
    Ok(symmetrize(&p))
}
