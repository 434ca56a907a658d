//! Config-driven Monte Carlo experiment runner.
//!
//! A run sweeps ensemble sizes: per `(replicate, size)` it draws a joint
//! ensemble on its own RNG streams, builds every requested update map at the
//! fixed observation, transports the ensemble, draws
//! `posterior_multiplier × N` exact posterior reference samples on a
//! disjoint stream, and scores the analysis ensemble against the reference
//! with the exact W₂ solver. Replicates run in parallel but aggregation
//! order is fixed, so results are bit-identical for any worker count.

mod presets;

pub use presets::{preset, PRESET_NAMES};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::moments;
use crate::error::{Error, Result};
use crate::generators::{
    sample_random_mixture_params, DistributionSpec, JointModel, Model, ProductModel, Scalar1d,
    ScalarFn, SdecModel, SdecSpec,
};
use crate::rng::{stream_rng, StreamRole, STREAM_SCHEME};
use crate::updates::{apply_map, enku_map, ld_map, lot_map, AffineConditioningMap};
use crate::wasserstein::{w2_exact, PointCloud};

/// Update methods the runner can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodId {
    #[serde(rename = "enku")]
    Enku,
    #[serde(rename = "ld")]
    Ld,
    #[serde(rename = "lot")]
    Lot,
    #[serde(rename = "sdec-alt")]
    SdecAlt,
    #[serde(rename = "obsdep")]
    ObsDep,
}

impl MethodId {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Enku => "enku",
            MethodId::Ld => "ld",
            MethodId::Lot => "lot",
            MethodId::SdecAlt => "sdec-alt",
            MethodId::ObsDep => "obsdep",
        }
    }
}

impl std::str::FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enku" => Ok(MethodId::Enku),
            "ld" => Ok(MethodId::Ld),
            "lot" => Ok(MethodId::Lot),
            "sdec-alt" => Ok(MethodId::SdecAlt),
            "obsdep" => Ok(MethodId::ObsDep),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A marginal that is either given explicitly or drawn once per experiment
/// from the random-mixture construction (resolved with the spec seed and
/// shared across all replicates and sizes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SpecSource {
    Fixed { spec: DistributionSpec },
    RandomMixture {},
}

impl SpecSource {
    fn resolve(&self, rng: &mut impl rand::Rng) -> Result<DistributionSpec> {
        match self {
            SpecSource::Fixed { spec } => {
                spec.validate()?;
                Ok(spec.clone())
            }
            SpecSource::RandomMixture {} => Ok(sample_random_mixture_params(rng)),
        }
    }
}

/// Serializable model description; resolved into a concrete [`Model`] at run
/// start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Joint {
        z: SpecSource,
        y: SpecSource,
        coupling: Vec<Vec<f64>>,
    },
    Sdec {
        lambda: f64,
        weight: Vec<f64>,
        offset: f64,
        y: SpecSource,
        coupling: Vec<f64>,
    },
    Product {
        r: Scalar1d,
        f: ScalarFn,
    },
}

impl ModelConfig {
    /// Resolves spec randomness from the dedicated stream; z draws first,
    /// then y, so a fixed spec seed pins both.
    pub fn resolve(&self, spec_seed: u64) -> Result<Model> {
        let mut rng = stream_rng(spec_seed, 0, 0, StreamRole::SpecRandom);
        let model = match self {
            ModelConfig::Joint { z, y, coupling } => Model::Joint(JointModel {
                z_spec: z.resolve(&mut rng)?,
                y_spec: y.resolve(&mut rng)?,
                coupling: coupling.clone(),
            }),
            ModelConfig::Sdec {
                lambda,
                weight,
                offset,
                y,
                coupling,
            } => Model::Sdec(SdecModel {
                spec: SdecSpec {
                    lambda: *lambda,
                    weight: weight.clone(),
                    offset: *offset,
                    y_spec: y.resolve(&mut rng)?,
                    truncation: None,
                },
                coupling: coupling.clone(),
            }),
            ModelConfig::Product { r, f } => Model::Product(ProductModel {
                r_spec: r.clone(),
                f: *f,
            }),
        };
        model.validate()?;
        Ok(model)
    }
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelConfig,
    pub y_star: Vec<f64>,
    pub methods: Vec<MethodId>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Reference sample factor: the posterior cloud has this many times the
    /// ensemble size.
    pub posterior_multiplier: usize,
    pub seed: u64,
    pub spec_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::RunFailed("no methods requested".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.methods {
            if !seen.insert(*m) {
                return Err(Error::RunFailed(format!("duplicate method {m}")));
            }
        }
        if self.n_grid.is_empty() {
            return Err(Error::RunFailed("empty ensemble-size grid".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::RunFailed("n_grid must be strictly increasing".into()));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::RunFailed("ensemble sizes must be >= 2".into()));
        }
        if self.replicates == 0 {
            return Err(Error::RunFailed("replicates must be >= 1".into()));
        }
        if self.posterior_multiplier == 0 {
            return Err(Error::RunFailed("posterior_multiplier must be >= 1".into()));
        }
        let model = self.model.resolve(self.spec_seed)?;
        if self.y_star.len() != model.obs_dim() {
            return Err(Error::RunFailed(format!(
                "y_star has dimension {}, model observes dimension {}",
                self.y_star.len(),
                model.obs_dim()
            )));
        }
        for m in &self.methods {
            let ok = match m {
                MethodId::Enku | MethodId::Ld | MethodId::Lot => true,
                MethodId::SdecAlt => matches!(self.model, ModelConfig::Sdec { .. }),
                MethodId::ObsDep => matches!(self.model, ModelConfig::Product { .. }),
            };
            if !ok {
                return Err(Error::RunFailed(format!(
                    "method {m} requires a matching model kind"
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One replicate-level W₂ score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateScore {
    pub replicate: usize,
    pub w2: f64,
}

/// Aggregated scores for one `(method, ensemble size)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub method: MethodId,
    pub ensemble_size: usize,
    pub w2_mean: f64,
    /// Unbiased sample standard deviation over replicates divided by
    /// `√replicates`; zero when fewer than two replicates succeeded.
    pub w2_stderr: f64,
    pub w2_samples: Vec<ReplicateScore>,
}

/// A replicate that failed; kept in the result rather than silently skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub method: MethodId,
    pub ensemble_size: usize,
    pub replicate: usize,
    pub error: String,
}

/// Everything a run produces. Serialization is canonical: rerunning with
/// identical seeds yields byte-identical JSON regardless of worker count
/// (wall-clock metadata stays outside, in the runner's sidecar file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub stream_scheme: String,
    /// The model after spec-randomness resolution (what was actually run).
    pub resolved_model: Model,
    pub series: Vec<SeriesEntry>,
    pub failures: Vec<FailureRecord>,
}

/// Population data for the alternative exact map on a λ-decomposable joint.
#[derive(Debug, Clone, PartialEq)]
pub struct SdecPopulation {
    pub lambda: f64,
    pub weight: Vec<f64>,
    pub offset: f64,
    pub coupling: Vec<f64>,
    pub mean_y: Vec<f64>,
}

impl SdecPopulation {
    pub fn from_model(model: &SdecModel) -> Result<Self> {
        model.validate()?;
        let (mean_y, _) = model.spec.y_spec.population_moments()?;
        Ok(SdecPopulation {
            lambda: model.spec.lambda,
            weight: model.spec.weight.clone(),
            offset: model.spec.offset,
            coupling: model.coupling.clone(),
            mean_y: mean_y.iter().copied().collect(),
        })
    }
}

/// Non-EnKU exact map for the λ-decomposable joint: `A = λ`,
/// `B = w − λM`, with `c` fixed by matching the posterior mean
/// `E[Z] + M y⋆`.
pub fn sdec_alt_map(pop: &SdecPopulation, y_star: &DVector<f64>) -> Result<AffineConditioningMap> {
    if !(pop.lambda.is_finite() && pop.lambda.abs() < 1.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must satisfy |λ| < 1, got {}",
            pop.lambda
        )));
    }
    let m = pop.weight.len();
    if pop.coupling.len() != m || pop.mean_y.len() != m || y_star.len() != m {
        return Err(Error::DimensionMismatch("sdec population dimensions disagree".into()));
    }
    let a = DMatrix::from_element(1, 1, pop.lambda);
    let b = DMatrix::from_fn(1, m, |_, j| pop.weight[j] - pop.lambda * pop.coupling[j]);
    let mut offset = pop.offset * (1.0 - pop.lambda);
    for j in 0..m {
        offset -= pop.weight[j] * pop.mean_y[j];
        offset += pop.coupling[j] * y_star[j];
    }
    AffineConditioningMap::new(a, b, DVector::from_element(1, offset))
}

/// Observation-dependent exact map for the product model:
/// `L(x, y) = f(y⋆) · y`.
pub fn obsdep_map(f: &ScalarFn, y_star: f64) -> Result<AffineConditioningMap> {
    AffineConditioningMap::new(
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, f.eval(y_star)),
        DVector::zeros(1),
    )
}

fn build_map(
    method: MethodId,
    model: &Model,
    ensemble: &crate::ensemble::Ensemble,
    y_star: &DVector<f64>,
) -> Result<AffineConditioningMap> {
    match method {
        MethodId::Enku | MethodId::Ld | MethodId::Lot => {
            let mom = moments(ensemble)?;
            match method {
                MethodId::Enku => enku_map(&mom, y_star),
                MethodId::Ld => ld_map(&mom, y_star),
                _ => lot_map(&mom, y_star),
            }
        }
        MethodId::SdecAlt => {
            let Model::Sdec(sdec) = model else {
                return Err(Error::InvalidInput("sdec-alt needs a λ-decomposable model".into()));
            };
            sdec_alt_map(&SdecPopulation::from_model(sdec)?, y_star)
        }
        MethodId::ObsDep => {
            let Model::Product(product) = model else {
                return Err(Error::InvalidInput("obsdep needs a product model".into()));
            };
            obsdep_map(&product.f, y_star[0])
        }
    }
}

/// Runs the full sweep. Fails if more than 10% of `(method, size,
/// replicate)` cells fail.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let model = cfg.model.resolve(cfg.spec_seed)?;
    let y_star = DVector::from_vec(cfg.y_star.clone());

    // One task per (size, replicate); methods share the draw.
    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();

    let cell_results: Vec<Vec<(MethodId, std::result::Result<f64, String>)>> = tasks
        .par_iter()
        .map(|&(n, replicate)| {
            let scores = score_cell(cfg, &model, &y_star, n, replicate);
            match scores {
                Ok(per_method) => per_method,
                Err(e) => {
                    // Sampling-level failure: every method of the cell fails.
                    let msg = e.to_string();
                    cfg.methods.iter().map(|&m| (m, Err(msg.clone()))).collect()
                }
            }
        })
        .collect();

    let mut series = Vec::new();
    let mut failures = Vec::new();
    for &method in &cfg.methods {
        for &n in &cfg.n_grid {
            let mut samples = Vec::new();
            for (task_idx, &(task_n, replicate)) in tasks.iter().enumerate() {
                if task_n != n {
                    continue;
                }
                let (m, outcome) = cell_results[task_idx]
                    .iter()
                    .find(|(m, _)| *m == method)
                    .expect("every cell scores every method");
                debug_assert_eq!(*m, method);
                match outcome {
                    Ok(w2) => samples.push(ReplicateScore { replicate, w2: *w2 }),
                    Err(msg) => failures.push(FailureRecord {
                        method,
                        ensemble_size: n,
                        replicate,
                        error: msg.clone(),
                    }),
                }
            }
            let count = samples.len();
            let mean = if count > 0 {
                samples.iter().map(|s| s.w2).sum::<f64>() / count as f64
            } else {
                f64::NAN
            };
            let stderr = if count > 1 {
                let var = samples.iter().map(|s| (s.w2 - mean).powi(2)).sum::<f64>()
                    / (count as f64 - 1.0);
                (var / count as f64).sqrt()
            } else {
                0.0
            };
            series.push(SeriesEntry {
                method,
                ensemble_size: n,
                w2_mean: mean,
                w2_stderr: stderr,
                w2_samples: samples,
            });
        }
    }

    let total_cells = cfg.methods.len() * cfg.n_grid.len() * cfg.replicates;
    if failures.len() * 10 > total_cells {
        return Err(Error::RunFailed(format!(
            "{} of {} cells failed (> 10%); first failure: {}",
            failures.len(),
            total_cells,
            failures[0].error
        )));
    }

    Ok(RunResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        stream_scheme: STREAM_SCHEME.to_string(),
        resolved_model: model,
        series,
        failures,
    })
}

fn score_cell(
    cfg: &ExperimentConfig,
    model: &Model,
    y_star: &DVector<f64>,
    n: usize,
    replicate: usize,
) -> Result<Vec<(MethodId, std::result::Result<f64, String>)>> {
    let mut rng_z = stream_rng(cfg.seed, replicate as u64, n as u64, StreamRole::LatentZ);
    let mut rng_y = stream_rng(cfg.seed, replicate as u64, n as u64, StreamRole::ObservedY);
    let joint = model.sample_joint(n, &mut rng_z, &mut rng_y)?;

    let mut rng_ref = stream_rng(cfg.seed, replicate as u64, n as u64, StreamRole::PosteriorRef);
    let reference = model.sample_posterior(y_star, cfg.posterior_multiplier * n, &mut rng_ref)?;
    let reference = PointCloud::new(reference)?;

    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let score = build_map(method, model, &joint.ensemble, y_star)
            .and_then(|map| apply_map(&map, &joint.ensemble))
            .and_then(|analysis| analysis.into_point_cloud())
            .and_then(|cloud| w2_exact(&cloud, &reference))
            .map(|r| r.distance)
            .map_err(|e| e.to_string());
        out.push((method, score));
    }
    Ok(out)
}

/// Log–log convergence summary for one method: least-squares slope over the
/// first half of the grid and the plateau level (mean of the last two grid
/// points).
pub fn fit_convergence(result: &RunResult, method: MethodId) -> Result<(f64, f64)> {
    let mut points: Vec<(usize, f64)> = result
        .series
        .iter()
        .filter(|s| s.method == method)
        .map(|s| (s.ensemble_size, s.w2_mean))
        .collect();
    points.sort_by_key(|&(n, _)| n);
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "fit_convergence needs at least 3 grid points, got {}",
            points.len()
        )));
    }
    let head = points.len().div_ceil(2);
    if points.iter().take(head).any(|&(_, m)| m <= 0.0 || !m.is_finite()) {
        return Err(Error::Degenerate("zero or non-finite mean in the fitted range".into()));
    }
    let xs: Vec<f64> = points[..head].iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points[..head].iter().map(|&(_, m)| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / head as f64;
    let my = ys.iter().sum::<f64>() / head as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("grid too narrow for a slope".into()));
    }
    let slope = sxy / sxx;
    let tail = &points[points.len() - 2..];
    let floor = (tail[0].1 + tail[1].1) / 2.0;
    Ok((slope, floor))
}

/// Writes `results.json`, the long-format `results_long.csv`, and the
/// plot-ready `plot_data.csv` into `out_dir`.
pub fn emit(result: &RunResult, out_dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let json_path = out_dir.join("results.json");
    let json = result_json(result);
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;

    let mut long = String::from("method,ensemble_size,replicate,w2\n");
    for entry in &result.series {
        for sample in &entry.w2_samples {
            long.push_str(&format!(
                "{},{},{},{}\n",
                entry.method, entry.ensemble_size, sample.replicate, sample.w2
            ));
        }
    }
    let long_path = out_dir.join("results_long.csv");
    std::fs::write(&long_path, long).map_err(|e| Error::io(&long_path, e))?;

    let mut plot = String::from("method,ensemble_size,w2_mean,w2_stderr\n");
    for entry in &result.series {
        plot.push_str(&format!(
            "{},{},{},{}\n",
            entry.method, entry.ensemble_size, entry.w2_mean, entry.w2_stderr
        ));
    }
    let plot_path = out_dir.join("plot_data.csv");
    std::fs::write(&plot_path, plot).map_err(|e| Error::io(&plot_path, e))?;
    Ok(())
}

/// Canonical JSON encoding of a run result (used for the determinism check).
pub fn result_json(result: &RunResult) -> String {
    let mut json = serde_json::to_string_pretty(result).expect("result serializes");
    json.push('\n');
    json
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_gaussian_config() -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            model: ModelConfig::Joint {
                z: SpecSource::Fixed {
                    spec: DistributionSpec::Gaussian {
                        mean: vec![0.0, 0.0],
                        cov: vec![vec![10.0, -2.5], vec![-2.5, 1.0]],
                    },
                },
                y: SpecSource::Fixed {
                    spec: DistributionSpec::Gaussian {
                        mean: vec![0.0, 0.0],
                        cov: vec![vec![1.0, 1.5], vec![1.5, 5.0]],
                    },
                },
                coupling: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            y_star: vec![0.4, -0.2],
            methods: vec![MethodId::Enku],
            n_grid: vec![8],
            replicates: 2,
            posterior_multiplier: 6,
            seed: 11,
            spec_seed: 1,
        }
    }

    #[test]
    fn smallest_run_has_expected_shape() {
        let result = run_experiment(&tiny_gaussian_config()).unwrap();
        assert_eq!(result.series.len(), 1);
        let entry = &result.series[0];
        assert_eq!(entry.w2_samples.len(), 2);
        assert!(result.failures.is_empty());
        // stderr = sample std of two values / √2 = |d| / 2.
        let d = (entry.w2_samples[0].w2 - entry.w2_samples[1].w2).abs();
        assert_abs_diff_eq!(entry.w2_stderr, d / 2.0, epsilon = 1e-12);
        let mean = (entry.w2_samples[0].w2 + entry.w2_samples[1].w2) / 2.0;
        assert_abs_diff_eq!(entry.w2_mean, mean, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_point_masses_give_zero_distance() {
        let cfg = ExperimentConfig {
            name: "point".into(),
            model: ModelConfig::Joint {
                z: SpecSource::Fixed {
                    spec: DistributionSpec::Gaussian {
                        mean: vec![1.0],
                        cov: vec![vec![0.0]],
                    },
                },
                y: SpecSource::Fixed {
                    spec: DistributionSpec::Gaussian {
                        mean: vec![-2.0],
                        cov: vec![vec![0.0]],
                    },
                },
                coupling: vec![vec![1.0]],
            },
            y_star: vec![-2.0],
            methods: vec![MethodId::Enku, MethodId::Ld, MethodId::Lot],
            n_grid: vec![16],
            replicates: 2,
            posterior_multiplier: 6,
            seed: 3,
            spec_seed: 1,
        };
        let result = run_experiment(&cfg).unwrap();
        for entry in &result.series {
            assert_abs_diff_eq!(entry.w2_mean, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn determinism_across_worker_counts() {
        let cfg = tiny_gaussian_config();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool2 = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let r1 = pool1.install(|| run_experiment(&cfg)).unwrap();
        let r2 = pool2.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(result_json(&r1), result_json(&r2));
    }

    #[test]
    fn sdec_alt_map_examples() {
        // λ = 0: posterior reconstructed purely from fresh Y draws shifted.
        let pop = SdecPopulation {
            lambda: 0.0,
            weight: vec![1.0],
            offset: 0.0,
            coupling: vec![1.0],
            mean_y: vec![0.0],
        };
        let map = sdec_alt_map(&pop, &DVector::from_element(1, 0.4)).unwrap();
        assert_eq!(map.a()[(0, 0)], 0.0);
        assert_eq!(map.b()[(0, 0)], 1.0);
        assert_abs_diff_eq!(map.c()[0], 0.4, epsilon = 1e-15);

        // λ = 0.5, w = 1, M = 1, standard-normal Y: mean matching gives the
        // posterior mean E[Z] + y⋆ exactly.
        let pop = SdecPopulation {
            lambda: 0.5,
            weight: vec![1.0],
            offset: 0.25,
            coupling: vec![1.0],
            mean_y: vec![0.0],
        };
        let y_star = DVector::from_element(1, 0.7);
        let map = sdec_alt_map(&pop, &y_star).unwrap();
        assert_abs_diff_eq!(map.a()[(0, 0)], 0.5);
        assert_abs_diff_eq!(map.b()[(0, 0)], 0.5);
        // E[AX + BY + c] with E[X] = E[Z] + M·E[Y] = 0.25, E[Y] = 0.
        let mean_out = 0.5 * 0.25 + map.c()[0];
        assert_abs_diff_eq!(mean_out, 0.25 + 0.7, epsilon = 1e-10);

        let bad = SdecPopulation {
            lambda: 1.0,
            ..pop
        };
        assert!(sdec_alt_map(&bad, &y_star).is_err());
    }

    #[test]
    fn obsdep_map_examples() {
        let zero = obsdep_map(&ScalarFn::Constant { value: 0.0 }, 0.3).unwrap();
        assert_eq!(zero.a().norm(), 0.0);
        assert_eq!(zero.b().norm(), 0.0);

        let ident = obsdep_map(&ScalarFn::Constant { value: 1.0 }, 0.3).unwrap();
        assert_eq!(ident.b()[(0, 0)], 1.0);

        let sq = obsdep_map(&ScalarFn::OnePlusSquare, 0.5).unwrap();
        assert_abs_diff_eq!(sq.b()[(0, 0)], 1.25, epsilon = 1e-15);
    }

    #[test]
    fn fit_convergence_on_synthetic_series() {
        let mut result = run_experiment(&tiny_gaussian_config()).unwrap();
        // Synthetic exact power law: w2_mean = N^{-1/2}.
        result.series = [64usize, 256, 1024, 4096]
            .iter()
            .map(|&n| SeriesEntry {
                method: MethodId::Enku,
                ensemble_size: n,
                w2_mean: (n as f64).powf(-0.5),
                w2_stderr: 0.0,
                w2_samples: vec![],
            })
            .collect();
        let (slope, floor) = fit_convergence(&result, MethodId::Enku).unwrap();
        assert_abs_diff_eq!(slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            floor,
            ((1024f64).powf(-0.5) + (4096f64).powf(-0.5)) / 2.0,
            epsilon = 1e-15
        );

        // Constant series: slope 0, floor at the constant.
        for entry in result.series.iter_mut() {
            entry.w2_mean = 0.3;
        }
        let (slope, floor) = fit_convergence(&result, MethodId::Enku).unwrap();
        assert_abs_diff_eq!(slope, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(floor, 0.3, epsilon = 1e-15);

        // Zero means are degenerate.
        for entry in result.series.iter_mut() {
            entry.w2_mean = 0.0;
        }
        assert!(matches!(
            fit_convergence(&result, MethodId::Enku),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn emit_writes_expected_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            methods: vec![MethodId::Enku, MethodId::Ld],
            n_grid: vec![8, 16, 32],
            replicates: 5,
            ..tiny_gaussian_config()
        };
        let result = run_experiment(&cfg).unwrap();
        emit(&result, dir.path()).unwrap();
        let long = std::fs::read_to_string(dir.path().join("results_long.csv")).unwrap();
        assert_eq!(long.lines().count(), 1 + 2 * 3 * 5);
        let plot = std::fs::read_to_string(dir.path().join("plot_data.csv")).unwrap();
        assert_eq!(plot.lines().count(), 1 + 2 * 3);

        // Round trip through JSON reproduces the result exactly.
        let json = std::fs::read_to_string(dir.path().join("results.json")).unwrap();
        let back: RunResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, result);

        // Empty series: header-only CSVs.
        let mut empty = result.clone();
        empty.series.clear();
        emit(&empty, dir.path()).unwrap();
        let long = std::fs::read_to_string(dir.path().join("results_long.csv")).unwrap();
        assert_eq!(long, "method,ensemble_size,replicate,w2\n");
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = tiny_gaussian_config();
        cfg.n_grid = vec![8, 8];
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_gaussian_config();
        cfg.methods = vec![MethodId::SdecAlt];
        assert!(cfg.validate().is_err()); // sdec-alt on a joint model

        let mut cfg = tiny_gaussian_config();
        cfg.y_star = vec![0.0];
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_gaussian_config();
        cfg.methods = vec![MethodId::Enku, MethodId::Enku];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn population_gain_update_matches_pure_monte_carlo_error() {
        // With the analytic gain K = M, the transported ensemble is itself
        // an exact posterior sample, so its mean W2 to the reference matches
        // the W2 between two independent posterior samples of the same
        // sizes.
        use crate::generators::Model;
        use crate::rng::{stream_rng, StreamRole};
        use crate::updates::AffineConditioningMap;
        use crate::wasserstein::w2_exact;
        use nalgebra::DMatrix;

        let cfg = tiny_gaussian_config();
        let model = cfg.model.resolve(cfg.spec_seed).unwrap();
        let Model::Joint(jm) = &model else { panic!() };
        let gain = jm.coupling_matrix().unwrap();
        let y_star = DVector::from_vec(cfg.y_star.clone());
        let map = AffineConditioningMap::new(
            DMatrix::identity(2, 2),
            -&gain,
            &gain * &y_star,
        )
        .unwrap();

        let n = 512;
        let replicates = 20;
        let mut mapped_total = 0.0;
        let mut mc_total = 0.0;
        for r in 0..replicates {
            let mut rng_z = stream_rng(777, r, n, StreamRole::LatentZ);
            let mut rng_y = stream_rng(777, r, n, StreamRole::ObservedY);
            let joint = model.sample_joint(n as usize, &mut rng_z, &mut rng_y).unwrap();
            let analysis = apply_map(&map, &joint.ensemble).unwrap().into_point_cloud().unwrap();

            let mut rng_ref = stream_rng(777, r, n, StreamRole::PosteriorRef);
            let reference = PointCloud::new(
                model.sample_posterior(&y_star, 6 * n as usize, &mut rng_ref).unwrap(),
            )
            .unwrap();
            mapped_total += w2_exact(&analysis, &reference).unwrap().distance;

            // Pure Monte Carlo: an independent posterior draw of size N
            // against an independent reference of size 6N.
            let mut rng_mc = stream_rng(778, r, n, StreamRole::PosteriorRef);
            let mc_cloud = PointCloud::new(
                model.sample_posterior(&y_star, n as usize, &mut rng_mc).unwrap(),
            )
            .unwrap();
            let mut rng_mc_ref = stream_rng(779, r, n, StreamRole::PosteriorRef);
            let mc_reference = PointCloud::new(
                model.sample_posterior(&y_star, 6 * n as usize, &mut rng_mc_ref).unwrap(),
            )
            .unwrap();
            mc_total += w2_exact(&mc_cloud, &mc_reference).unwrap().distance;
        }
        let ratio = mapped_total / mc_total;
        assert!(ratio < 1.1, "population-gain error exceeds MC baseline: ratio {ratio}");
    }

    #[test]
    fn random_mixture_resolution_is_shared_and_seeded() {
        let cfg = ExperimentConfig {
            model: ModelConfig::Joint {
                z: SpecSource::RandomMixture {},
                y: SpecSource::RandomMixture {},
                coupling: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            ..tiny_gaussian_config()
        };
        let a = cfg.model.resolve(cfg.spec_seed).unwrap();
        let b = cfg.model.resolve(cfg.spec_seed).unwrap();
        assert_eq!(a, b);
        let c = cfg.model.resolve(cfg.spec_seed + 1).unwrap();
        assert_ne!(a, c);
        // z and y resolve to different draws from the same stream.
        let Model::Joint(jm) = a else { panic!() };
        assert_ne!(jm.z_spec, jm.y_spec);
    }
}
