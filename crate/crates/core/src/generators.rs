//! Samplers for the joint laws driving the experiments.
//!
//! [`DistributionSpec`] covers the marginal families (Gaussians, random
//! Gaussian mixtures, the ring density, scalar laws); [`Model`] assembles
//! them into joint laws with known structure:
//!
//! * [`JointModel`] — `(Z + MY, Y)` with `Z ⊥ Y`, the additive-coupling
//!   family on which the Kalman gain equals `M` in the mean field.
//! * [`SdecModel`] — a scalar `Z` built as the geometric series
//!   `b + Σ λᵏ wᵀ(Y⁽ᵏ⁾ − EY)`, giving a λ-decomposable joint by
//!   construction.
//! * [`ProductModel`] — `(f(Y)·Z, Y)` with `Z, Y` i.i.d. scalar draws, the
//!   family with an observation-dependent exact map.
//!
//! Every sampler is a pure function of `(spec, rng)`; generators retain
//! their latent `Z` draws next to the ensemble so per-particle oracles can
//! check update maps against the exactly-known posterior.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::linalg;

/// A scalar law with closed-form mean and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Scalar1d {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
    PointMass { value: f64 },
}

impl Scalar1d {
    pub fn validate(&self) -> Result<()> {
        match self {
            Scalar1d::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidInput(format!("uniform bounds ({lo}, {hi}) invalid")));
                }
            }
            Scalar1d::Normal { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && *std >= 0.0) {
                    return Err(Error::InvalidInput(format!("normal params ({mean}, {std}) invalid")));
                }
            }
            Scalar1d::PointMass { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidInput("point mass at non-finite value".into()));
                }
            }
        }
        Ok(())
    }

    pub fn sample_one(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Scalar1d::Uniform { lo, hi } => rng.gen_range(lo..hi),
            Scalar1d::Normal { mean, std } => mean + std * rng.sample::<f64, _>(StandardNormal),
            Scalar1d::PointMass { value } => value,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Scalar1d::Uniform { lo, hi } => 0.5 * (lo + hi),
            Scalar1d::Normal { mean, .. } => mean,
            Scalar1d::PointMass { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Scalar1d::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Scalar1d::Normal { std, .. } => std * std,
            Scalar1d::PointMass { .. } => 0.0,
        }
    }
}

/// Marginal law of a state or observation block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covs: Vec<Vec<Vec<f64>>>,
    },
    /// Concentric rings with von Mises angular modes: `r ~ Unif{1..K}`,
    /// `j ~ Unif{1..M}`, `θ|j ~ vM(2πj/M, κ)`, `ρ|r ~ N(ℓ_r, σ²)`,
    /// `Z = (ρ cos θ, ρ sin θ)`.
    Ring {
        rings: usize,
        modes: usize,
        radius_min: f64,
        radius_max: f64,
        kappa: f64,
        sigma: f64,
    },
    Scalar1d(Scalar1d),
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let c = rows[0].len();
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(r, c, &flat))
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Gaussian { mean, .. } => mean.len(),
            DistributionSpec::GaussianMixture { means, .. } => {
                means.first().map(|m| m.len()).unwrap_or(0)
            }
            DistributionSpec::Ring { .. } => 2,
            DistributionSpec::Scalar1d(_) => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Gaussian { mean, cov } => {
                let d = mean.len();
                if d == 0 {
                    return Err(Error::InvalidInput("gaussian must have dimension >= 1".into()));
                }
                let cov = to_matrix(cov)?;
                if cov.shape() != (d, d) {
                    return Err(Error::DimensionMismatch("covariance shape mismatch".into()));
                }
                linalg::psd_sqrt(&cov)?;
            }
            DistributionSpec::GaussianMixture { weights, means, covs } => {
                let k = weights.len();
                if k == 0 || means.len() != k || covs.len() != k {
                    return Err(Error::InvalidInput("mixture component counts disagree".into()));
                }
                if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
                    return Err(Error::InvalidInput("mixture weights must be nonnegative".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!("mixture weights sum to {total}, expected 1")));
                }
                let d = means[0].len();
                for (mean, cov) in means.iter().zip(covs) {
                    if mean.len() != d {
                        return Err(Error::DimensionMismatch("mixture mean dimensions disagree".into()));
                    }
                    let cov = to_matrix(cov)?;
                    if cov.shape() != (d, d) {
                        return Err(Error::DimensionMismatch("mixture covariance shape mismatch".into()));
                    }
                    linalg::psd_sqrt(&cov)?;
                }
            }
            DistributionSpec::Ring { rings, modes, radius_min, radius_max, kappa, sigma } => {
                if *rings == 0 || *modes == 0 {
                    return Err(Error::InvalidInput("ring spec needs rings >= 1 and modes >= 1".into()));
                }
                if !(*radius_min > 0.0 && radius_min <= radius_max && radius_max.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "ring radii (min {radius_min}, max {radius_max}) invalid"
                    )));
                }
                if *rings == 1 && radius_min != radius_max {
                    return Err(Error::InvalidInput("a single ring needs radius_min == radius_max".into()));
                }
                if !(*kappa > 0.0 && *sigma > 0.0) {
                    return Err(Error::InvalidInput("ring spec needs kappa > 0 and sigma > 0".into()));
                }
            }
            DistributionSpec::Scalar1d(s) => s.validate()?,
        }
        Ok(())
    }

    /// `count` i.i.d. draws, one sample per row.
    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
        if count == 0 {
            return Err(Error::InvalidInput("sample count must be >= 1".into()));
        }
        self.validate()?;
        match self {
            DistributionSpec::Gaussian { mean, cov } => {
                let root = linalg::psd_sqrt(&to_matrix(cov)?)?;
                let d = mean.len();
                let mut out = DMatrix::zeros(count, d);
                for i in 0..count {
                    let noise = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let x = &root * noise;
                    for j in 0..d {
                        out[(i, j)] = mean[j] + x[j];
                    }
                }
                Ok(out)
            }
            DistributionSpec::GaussianMixture { weights, means, covs } => {
                let d = means[0].len();
                let roots: Vec<DMatrix<f64>> = covs
                    .iter()
                    .map(|c| linalg::psd_sqrt(&to_matrix(c)?))
                    .collect::<Result<_>>()?;
                let mut cumulative = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w;
                    cumulative.push(acc);
                }
                let mut out = DMatrix::zeros(count, d);
                for i in 0..count {
                    let u: f64 = rng.gen();
                    let k = cumulative.iter().position(|&c| u < c).unwrap_or(weights.len() - 1);
                    let noise = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let x = &roots[k] * noise;
                    for j in 0..d {
                        out[(i, j)] = means[k][j] + x[j];
                    }
                }
                Ok(out)
            }
            DistributionSpec::Ring { rings, modes, radius_min, radius_max, kappa, sigma } => {
                let radii: Vec<f64> = if *rings == 1 {
                    vec![*radius_min]
                } else {
                    (0..*rings)
                        .map(|r| radius_min + (radius_max - radius_min) * r as f64 / (*rings as f64 - 1.0))
                        .collect()
                };
                let mut out = DMatrix::zeros(count, 2);
                for i in 0..count {
                    let ring = rng.gen_range(0..*rings);
                    let mode = rng.gen_range(1..=*modes);
                    let center = std::f64::consts::TAU * mode as f64 / *modes as f64;
                    let theta = sample_von_mises(center, *kappa, rng);
                    let rho = radii[ring] + sigma * rng.sample::<f64, _>(StandardNormal);
                    out[(i, 0)] = rho * theta.cos();
                    out[(i, 1)] = rho * theta.sin();
                }
                Ok(out)
            }
            DistributionSpec::Scalar1d(s) => {
                Ok(DMatrix::from_fn(count, 1, |_, _| s.sample_one(rng)))
            }
        }
    }

    /// Closed-form mean and covariance where available (not for the ring).
    pub fn population_moments(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        match self {
            DistributionSpec::Gaussian { mean, cov } => {
                Ok((DVector::from_vec(mean.clone()), to_matrix(cov)?))
            }
            DistributionSpec::GaussianMixture { weights, means, covs } => {
                let d = means[0].len();
                let mut mu = DVector::zeros(d);
                for (w, m) in weights.iter().zip(means) {
                    mu += *w * DVector::from_vec(m.clone());
                }
                let mut second = DMatrix::zeros(d, d);
                for ((w, m), c) in weights.iter().zip(means).zip(covs) {
                    let mk = DVector::from_vec(m.clone());
                    second += *w * (to_matrix(c)? + &mk * mk.transpose());
                }
                Ok((mu.clone(), second - &mu * mu.transpose()))
            }
            DistributionSpec::Ring { .. } => Err(Error::InvalidInput(
                "population moments are not available for the ring spec".into(),
            )),
            DistributionSpec::Scalar1d(s) => Ok((
                DVector::from_element(1, s.mean()),
                DMatrix::from_element(1, 1, s.variance()),
            )),
        }
    }
}

/// Von Mises draw via the Best–Fisher rejection method, wrapped to `[0, 2π)`.
pub fn sample_von_mises(mu: f64, kappa: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(kappa > 0.0);
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen();
        let z = (std::f64::consts::PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let theta = mu + (u3 - 0.5).signum() * f.clamp(-1.0, 1.0).acos();
            return theta.rem_euclid(std::f64::consts::TAU);
        }
    }
}

/// Random 6-component 2-D mixture: `w ~ Dir(1₆)` (normalized unit-rate
/// gammas), means with i.i.d. `N(0, 36)` coordinates, covariances
/// `F diag(s) Fᵀ + 10⁻⁶ I` with standard-normal `F` and `s_i ~ U(0.2, 1.5)`.
pub fn sample_random_mixture_params(rng: &mut impl Rng) -> DistributionSpec {
    let components = 6;
    let gamma = Gamma::new(1.0, 1.0).expect("valid gamma");
    let raw: Vec<f64> = (0..components).map(|_| gamma.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|g| g / total).collect();

    let mut means = Vec::with_capacity(components);
    let mut covs = Vec::with_capacity(components);
    for _ in 0..components {
        let mean: Vec<f64> = (0..2).map(|_| 6.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let f = DMatrix::from_fn(2, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = DVector::from_fn(2, |_, _| rng.gen_range(0.2..1.5));
        let cov = &f * DMatrix::from_diagonal(&s) * f.transpose() + DMatrix::identity(2, 2) * 1e-6;
        means.push(mean);
        covs.push(vec![
            vec![cov[(0, 0)], cov[(0, 1)]],
            vec![cov[(1, 0)], cov[(1, 1)]],
        ]);
    }
    DistributionSpec::GaussianMixture { weights, means, covs }
}

/// An ensemble together with the latent `Z` draws that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub ensemble: Ensemble,
    /// `N × n` latent states; never consumed by update methods.
    pub latent: DMatrix<f64>,
}

/// Additive-coupling joint `(Z + MY, Y)` with `Z ⊥ Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointModel {
    pub z_spec: DistributionSpec,
    pub y_spec: DistributionSpec,
    /// `n × m` coupling matrix `M`.
    pub coupling: Vec<Vec<f64>>,
}

impl JointModel {
    pub fn validate(&self) -> Result<()> {
        self.z_spec.validate()?;
        self.y_spec.validate()?;
        let m = to_matrix(&self.coupling)?;
        if m.nrows() != self.z_spec.dim() || m.ncols() != self.y_spec.dim() {
            return Err(Error::DimensionMismatch(format!(
                "coupling is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                self.z_spec.dim(),
                self.y_spec.dim()
            )));
        }
        Ok(())
    }

    pub fn coupling_matrix(&self) -> Result<DMatrix<f64>> {
        to_matrix(&self.coupling)
    }

    /// Draws `(z_i + M y_i, y_i)` with independent `z` and `y` streams.
    pub fn sample_joint(
        &self,
        count: usize,
        rng_z: &mut impl Rng,
        rng_y: &mut impl Rng,
    ) -> Result<JointSample> {
        self.validate()?;
        let m = self.coupling_matrix()?;
        let zs = self.z_spec.sample(count, rng_z)?;
        let ys = self.y_spec.sample(count, rng_y)?;
        let xs = &zs + &ys * m.transpose();
        Ok(JointSample {
            ensemble: Ensemble::from_blocks(&xs, &ys)?,
            latent: zs,
        })
    }

    /// Exact posterior draws `z_i + M y⋆`.
    pub fn sample_posterior(
        &self,
        y_star: &DVector<f64>,
        count: usize,
        rng: &mut impl Rng,
    ) -> Result<DMatrix<f64>> {
        self.validate()?;
        let m = self.coupling_matrix()?;
        if y_star.len() != m.ncols() {
            return Err(Error::DimensionMismatch("y_star dimension mismatch".into()));
        }
        let shift = &m * y_star;
        let mut zs = self.z_spec.sample(count, rng)?;
        for i in 0..count {
            for j in 0..shift.len() {
                zs[(i, j)] += shift[j];
            }
        }
        Ok(zs)
    }
}

/// Scalar λ-decomposable construction: `Z = b + Σ_{k<K} λᵏ wᵀ(Y⁽ᵏ⁾ − EY)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdecSpec {
    pub lambda: f64,
    pub weight: Vec<f64>,
    pub offset: f64,
    pub y_spec: DistributionSpec,
    /// Series truncation; defaults to the first `K` with `|λ|^K < 1e-12`.
    #[serde(default)]
    pub truncation: Option<usize>,
}

impl SdecSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda.abs() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must satisfy |λ| < 1, got {}",
                self.lambda
            )));
        }
        if !self.offset.is_finite() {
            return Err(Error::InvalidInput("offset must be finite".into()));
        }
        self.y_spec.validate()?;
        if self.weight.len() != self.y_spec.dim() {
            return Err(Error::DimensionMismatch("weight dimension mismatch".into()));
        }
        Ok(())
    }

    pub fn truncation_terms(&self) -> usize {
        if let Some(k) = self.truncation {
            return k.max(1);
        }
        if self.lambda == 0.0 {
            return 1;
        }
        let k = (1e-12_f64.ln() / self.lambda.abs().ln()).ceil() as usize;
        k.max(1)
    }
}

/// Scalar samples of the truncated geometric series; each sample spends
/// `truncation_terms` fresh `Y` draws (consumed in chunks, so the stream
/// order is independent of the chunking).
pub fn sample_sdec_z(spec: &SdecSpec, count: usize, rng: &mut impl Rng) -> Result<DVector<f64>> {
    spec.validate()?;
    let (mean_y, _) = spec.y_spec.population_moments()?;
    let w = DVector::from_vec(spec.weight.clone());
    let terms = spec.truncation_terms();
    let chunk_particles = (4096 / terms.max(1)).max(1);
    let mut out = DVector::zeros(count);
    let mut done = 0;
    while done < count {
        let take = chunk_particles.min(count - done);
        let draws = spec.y_spec.sample(take * terms, rng)?;
        for p in 0..take {
            let mut acc = spec.offset;
            let mut scale = 1.0;
            for k in 0..terms {
                let row = p * terms + k;
                let mut dot = 0.0;
                for j in 0..w.len() {
                    dot += w[j] * (draws[(row, j)] - mean_y[j]);
                }
                acc += scale * dot;
                scale *= spec.lambda;
            }
            out[done + p] = acc;
        }
        done += take;
    }
    Ok(out)
}

/// Scalar joint `(Z + MᵀY, Y)` with λ-decomposable `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdecModel {
    pub spec: SdecSpec,
    /// Row of the `1 × m` coupling.
    pub coupling: Vec<f64>,
}

impl SdecModel {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.coupling.len() != self.spec.y_spec.dim() {
            return Err(Error::DimensionMismatch("coupling dimension mismatch".into()));
        }
        Ok(())
    }

    pub fn sample_joint(
        &self,
        count: usize,
        rng_z: &mut impl Rng,
        rng_y: &mut impl Rng,
    ) -> Result<JointSample> {
        self.validate()?;
        let zs = sample_sdec_z(&self.spec, count, rng_z)?;
        let ys = self.spec.y_spec.sample(count, rng_y)?;
        let m = DVector::from_vec(self.coupling.clone());
        let xs = DMatrix::from_fn(count, 1, |i, _| {
            let mut acc = zs[i];
            for j in 0..m.len() {
                acc += m[j] * ys[(i, j)];
            }
            acc
        });
        Ok(JointSample {
            ensemble: Ensemble::from_blocks(&xs, &ys)?,
            latent: DMatrix::from_fn(count, 1, |i, _| zs[i]),
        })
    }

    pub fn sample_posterior(
        &self,
        y_star: &DVector<f64>,
        count: usize,
        rng: &mut impl Rng,
    ) -> Result<DMatrix<f64>> {
        self.validate()?;
        if y_star.len() != self.coupling.len() {
            return Err(Error::DimensionMismatch("y_star dimension mismatch".into()));
        }
        let shift: f64 = self.coupling.iter().zip(y_star.iter()).map(|(m, y)| m * y).sum();
        let zs = sample_sdec_z(&self.spec, count, rng)?;
        Ok(DMatrix::from_fn(count, 1, |i, _| zs[i] + shift))
    }
}

/// Named scalar functions usable in serialized model specs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    Constant { value: f64 },
    /// `f(y) = 1 + y²`.
    OnePlusSquare,
}

impl ScalarFn {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            ScalarFn::Constant { value } => value,
            ScalarFn::OnePlusSquare => 1.0 + y * y,
        }
    }
}

/// Product joint `(f(Y)·Z, Y)` with `Z, Y` i.i.d. from a scalar law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductModel {
    pub r_spec: Scalar1d,
    pub f: ScalarFn,
}

impl ProductModel {
    pub fn validate(&self) -> Result<()> {
        self.r_spec.validate()
    }

    pub fn sample_joint(
        &self,
        count: usize,
        rng_z: &mut impl Rng,
        rng_y: &mut impl Rng,
    ) -> Result<JointSample> {
        self.validate()?;
        if count == 0 {
            return Err(Error::InvalidInput("sample count must be >= 1".into()));
        }
        let zs = DMatrix::from_fn(count, 1, |_, _| self.r_spec.sample_one(rng_z));
        let ys = DMatrix::from_fn(count, 1, |_, _| self.r_spec.sample_one(rng_y));
        let xs = DMatrix::from_fn(count, 1, |i, _| self.f.eval(ys[(i, 0)]) * zs[(i, 0)]);
        Ok(JointSample {
            ensemble: Ensemble::from_blocks(&xs, &ys)?,
            latent: zs,
        })
    }

    /// Exact posterior draws `f(y⋆)·z` with fresh `z ~ r`.
    pub fn sample_posterior(
        &self,
        y_star: &DVector<f64>,
        count: usize,
        rng: &mut impl Rng,
    ) -> Result<DMatrix<f64>> {
        self.validate()?;
        if y_star.len() != 1 {
            return Err(Error::DimensionMismatch("product model is scalar".into()));
        }
        let factor = self.f.eval(y_star[0]);
        Ok(DMatrix::from_fn(count, 1, |_, _| factor * self.r_spec.sample_one(rng)))
    }
}

/// Any of the joint-law constructions understood by the experiment harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Joint(JointModel),
    Sdec(SdecModel),
    Product(ProductModel),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Joint(m) => m.validate(),
            Model::Sdec(m) => m.validate(),
            Model::Product(m) => m.validate(),
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Model::Joint(m) => m.z_spec.dim(),
            Model::Sdec(_) | Model::Product(_) => 1,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Model::Joint(m) => m.y_spec.dim(),
            Model::Sdec(m) => m.spec.y_spec.dim(),
            Model::Product(_) => 1,
        }
    }

    pub fn sample_joint(
        &self,
        count: usize,
        rng_z: &mut impl Rng,
        rng_y: &mut impl Rng,
    ) -> Result<JointSample> {
        match self {
            Model::Joint(m) => m.sample_joint(count, rng_z, rng_y),
            Model::Sdec(m) => m.sample_joint(count, rng_z, rng_y),
            Model::Product(m) => m.sample_joint(count, rng_z, rng_y),
        }
    }

    pub fn sample_posterior(
        &self,
        y_star: &DVector<f64>,
        count: usize,
        rng: &mut impl Rng,
    ) -> Result<DMatrix<f64>> {
        match self {
            Model::Joint(m) => m.sample_posterior(y_star, count, rng),
            Model::Sdec(m) => m.sample_posterior(y_star, count, rng),
            Model::Product(m) => m.sample_posterior(y_star, count, rng),
        }
    }
}
