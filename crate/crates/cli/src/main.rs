//! Command-line front end: sampling, affine updates, exact W₂ scoring,
//! symmetry diagnostics, and the Monte Carlo experiment runner.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Deserialize;

use enku_core::diagnostics::{
    cov_rank_check, cyclic_symmetry_stat, default_frequency_grid, translation_residual,
    SymmetryReport,
};
use enku_core::ensemble::moments;
use enku_core::generators::{DistributionSpec, Model};
use enku_core::harness::{
    emit, preset, result_json, run_experiment, ExperimentConfig, PRESET_NAMES,
};
use enku_core::io;
use enku_core::linalg;
use enku_core::rng::{stream_rng, StreamRole};
use enku_core::updates::{apply_map, eakf_svd_update, enku_map, ld_map, lot_map};
use enku_core::wasserstein::{w2_exact, PointCloud};

#[derive(Parser)]
#[command(
    name = "enku",
    about = "Affine ensemble updates for likelihood-free Bayesian inversion",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a distribution spec or a joint model (JSON file).
    Sample {
        /// JSON file holding a distribution spec or a joint model.
        #[arg(long)]
        spec: PathBuf,
        /// Number of samples / particles.
        #[arg(long)]
        n: usize,
        /// Master seed for the sampling streams.
        #[arg(long)]
        seed: u64,
        /// Output CSV (point cloud for a marginal, ensemble for a model).
        #[arg(long)]
        out: PathBuf,
        /// Also write the latent z columns for joint models.
        #[arg(long)]
        keep_latent: bool,
    },
    /// Apply an affine update to an ensemble file.
    Update {
        /// One of enku, ld, lot, eakf-svd.
        #[arg(long)]
        method: String,
        /// Ensemble CSV with x1..xn,y1..ym header.
        #[arg(long)]
        ensemble: PathBuf,
        /// Observation, comma separated (e.g. "0.4,-0.2").
        #[arg(long)]
        y_star: String,
        /// Observation operator CSV (eakf-svd only).
        #[arg(long)]
        h: Option<PathBuf>,
        /// Observation noise covariance CSV (eakf-svd only).
        #[arg(long)]
        gamma: Option<PathBuf>,
        /// Output CSV with the analysis states.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact 2-Wasserstein distance between two point clouds.
    W2 {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Symmetry diagnostics for a sample cloud; prints a JSON report.
    Diagnose {
        /// Point-cloud CSV (x1..xd header).
        #[arg(long)]
        samples: PathBuf,
        /// Cyclic order k for the rotation-symmetry statistic (2-D only).
        #[arg(long)]
        cyclic_order: Option<usize>,
        /// Skip mean-centering before the ECF statistic.
        #[arg(long)]
        uncentered: bool,
        /// Second cloud for the translation-residual diagnostic.
        #[arg(long)]
        pair: Option<PathBuf>,
    },
    /// Run an experiment config and write result files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads (default: ENKU_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write a shipped experiment preset as JSON.
    Preset {
        /// One of exp1, exp2, exp3, sdec, obsdep.
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Input accepted by `sample`: a joint model or a bare marginal.
#[derive(Deserialize)]
#[serde(untagged)]
enum SampleInput {
    Model(Model),
    Dist(DistributionSpec),
}

fn parse_vector(text: &str) -> anyhow::Result<DVector<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("cannot parse vector {text:?}"))?;
    if values.is_empty() {
        bail!("empty vector");
    }
    Ok(DVector::from_vec(values))
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sample {
            spec,
            n,
            seed,
            out,
            keep_latent,
        } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let input: SampleInput = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", spec.display()))?;
            match input {
                SampleInput::Model(model) => {
                    let mut rng_z = stream_rng(seed, 0, n as u64, StreamRole::LatentZ);
                    let mut rng_y = stream_rng(seed, 0, n as u64, StreamRole::ObservedY);
                    let joint = model.sample_joint(n, &mut rng_z, &mut rng_y)?;
                    if keep_latent {
                        io::write_joint_sample(&joint, &out)?;
                    } else {
                        io::write_ensemble(&joint.ensemble, &out)?;
                    }
                    eprintln!(
                        "wrote {} particles (n={}, m={}) to {}",
                        joint.ensemble.len(),
                        joint.ensemble.state_dim(),
                        joint.ensemble.obs_dim(),
                        out.display()
                    );
                }
                SampleInput::Dist(dist) => {
                    let mut rng = stream_rng(seed, 0, n as u64, StreamRole::LatentZ);
                    let samples = dist.sample(n, &mut rng)?;
                    let cloud = PointCloud::new(samples)?;
                    io::write_point_cloud(&cloud, &out)?;
                    eprintln!("wrote {} samples (dim {}) to {}", n, cloud.dim(), out.display());
                }
            }
        }
        Command::Update {
            method,
            ensemble,
            y_star,
            h,
            gamma,
            out,
        } => {
            let e = io::read_ensemble(&ensemble)?;
            let y_star = parse_vector(&y_star)?;
            let analysis = match method.as_str() {
                "enku" | "ld" | "lot" => {
                    let mom = moments(&e)?;
                    let map = match method.as_str() {
                        "enku" => enku_map(&mom, &y_star)?,
                        "ld" => ld_map(&mom, &y_star)?,
                        _ => lot_map(&mom, &y_star)?,
                    };
                    apply_map(&map, &e)?
                }
                "eakf-svd" => {
                    let (Some(h), Some(gamma)) = (h, gamma) else {
                        bail!("eakf-svd needs --h and --gamma matrix files");
                    };
                    let h = io::read_matrix(&h)?;
                    let gamma = io::read_matrix(&gamma)?;
                    eakf_svd_update(&e.states(), &h, &gamma, &y_star)?
                }
                other => bail!("unknown method {other:?}; expected enku, ld, lot, or eakf-svd"),
            };
            let cloud = analysis.into_point_cloud()?;
            io::write_point_cloud(&cloud, &out)?;
            eprintln!("wrote analysis ensemble to {}", out.display());
        }
        Command::W2 { a, b } => {
            let a = io::read_point_cloud(&a)?;
            let b = io::read_point_cloud(&b)?;
            let result = w2_exact(&a, &b)?;
            println!("distance: {}", result.distance);
            println!("squared_cost: {}", result.squared_cost);
        }
        Command::Diagnose {
            samples,
            cyclic_order,
            uncentered,
            pair,
        } => {
            let cloud = io::read_point_cloud(&samples)?;
            let tol = linalg::default_rtol(cloud.len(), cloud.dim());
            let (smallest_eigenvalue, numerical_rank) = cov_rank_check(cloud.points(), tol)?;
            let mut report = SymmetryReport {
                smallest_eigenvalue,
                numerical_rank,
                cyclic_order,
                cyc_statistic: None,
                translation_shift: None,
                translation_residual: None,
            };
            if let Some(order) = cyclic_order {
                let grid = default_frequency_grid();
                report.cyc_statistic =
                    Some(cyclic_symmetry_stat(cloud.points(), order, &grid, !uncentered)?);
            }
            if let Some(pair) = pair {
                let other = io::read_point_cloud(&pair)?;
                let (shift, residual) = translation_residual(&cloud, &other)?;
                report.translation_shift = Some(shift.iter().copied().collect());
                report.translation_residual = Some(residual);
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Run {
            config,
            out_dir,
            workers,
        } => {
            let workers = workers.or_else(|| {
                std::env::var("ENKU_WORKERS").ok().and_then(|v| v.parse().ok())
            });
            if let Some(k) = workers {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global()
                    .context("configuring worker pool")?;
            }
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            let start = Instant::now();
            let result = run_experiment(&cfg)?;
            let wall = start.elapsed().as_secs_f64();
            emit(&result, &out_dir)?;
            // Wall-clock info goes in a sidecar so results.json stays
            // byte-reproducible across runs and worker counts.
            let info = serde_json::json!({
                "wall_time_secs": wall,
                "workers": workers,
            });
            std::fs::write(
                out_dir.join("run_info.json"),
                serde_json::to_string_pretty(&info)? + "\n",
            )?;
            if !result.failures.is_empty() {
                eprintln!("{} replicate cells failed; see results.json", result.failures.len());
                std::process::exit(1);
            }
            let _ = result_json(&result); // canonical form exercised
            print_summary(&cfg, &result);
        }
        Command::Preset { name, out } => {
            let cfg = preset(&name)?;
            std::fs::write(&out, serde_json::to_string_pretty(&cfg)? + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote preset {name} to {} (available: {PRESET_NAMES:?})", out.display());
        }
    }
    Ok(())
}

fn print_summary(cfg: &ExperimentConfig, result: &enku_core::harness::RunResult) {
    println!("experiment: {} (hash {})", cfg.name, &result.config_hash[..12]);
    for entry in &result.series {
        println!(
            "  {:>8}  N={:<7} W2 = {:.6} ± {:.6}",
            entry.method.to_string(),
            entry.ensemble_size,
            entry.w2_mean,
            entry.w2_stderr
        );
    }
}
