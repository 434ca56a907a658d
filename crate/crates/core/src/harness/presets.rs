//! Shipped experiment configurations.
//!
//! `exp1`–`exp3` are the additive-coupling benchmarks in two dimensions
//! (Gaussian sanity check, random Gaussian mixtures, rings-plus-mixture),
//! all conditioning on `y⋆ = (0.4, −0.2)` with 30 replicates and a 6×
//! posterior reference. `sdec` and `obsdep` are the scalar non-uniqueness
//! and observation-dependent-gain constructions.

use super::{ExperimentConfig, MethodId, ModelConfig, SpecSource};
use crate::error::{Error, Result};
use crate::generators::{DistributionSpec, Scalar1d, ScalarFn};

pub const PRESET_NAMES: [&str; 5] = ["exp1", "exp2", "exp3", "sdec", "obsdep"];

const DEFAULT_GRID: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

fn identity_coupling() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![0.0, 1.0]]
}

/// Returns a shipped configuration by name (`exp1`, `exp2`, `exp3`, `sdec`,
/// `obsdep`).
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "exp1" => ExperimentConfig {
            name: "exp1".into(),
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
                coupling: identity_coupling(),
            },
            y_star: vec![0.4, -0.2],
            methods: vec![MethodId::Enku, MethodId::Ld, MethodId::Lot],
            n_grid: DEFAULT_GRID.to_vec(),
            replicates: 30,
            posterior_multiplier: 6,
            seed: 1001,
            spec_seed: 101,
        },
        "exp2" => ExperimentConfig {
            name: "exp2".into(),
            model: ModelConfig::Joint {
                z: SpecSource::RandomMixture {},
                y: SpecSource::RandomMixture {},
                coupling: identity_coupling(),
            },
            y_star: vec![0.4, -0.2],
            methods: vec![MethodId::Enku, MethodId::Ld, MethodId::Lot],
            n_grid: DEFAULT_GRID.to_vec(),
            replicates: 30,
            posterior_multiplier: 6,
            seed: 1002,
            spec_seed: 102,
        },
        "exp3" => ExperimentConfig {
            name: "exp3".into(),
            model: ModelConfig::Joint {
                z: SpecSource::Fixed {
                    spec: DistributionSpec::Ring {
                        rings: 3,
                        modes: 6,
                        radius_min: 1.4,
                        radius_max: 4.0,
                        kappa: 25.0,
                        sigma: 0.2,
                    },
                },
                y: SpecSource::RandomMixture {},
                coupling: identity_coupling(),
            },
            y_star: vec![0.4, -0.2],
            methods: vec![MethodId::Enku, MethodId::Ld, MethodId::Lot],
            n_grid: DEFAULT_GRID.to_vec(),
            replicates: 30,
            posterior_multiplier: 6,
            seed: 1003,
            spec_seed: 103,
        },
        "sdec" => ExperimentConfig {
            name: "sdec".into(),
            model: ModelConfig::Sdec {
                lambda: 0.5,
                weight: vec![1.0],
                offset: 0.0,
                y: SpecSource::Fixed {
                    spec: DistributionSpec::Scalar1d(Scalar1d::Normal {
                        mean: 0.0,
                        std: 1.0,
                    }),
                },
                coupling: vec![1.0],
            },
            y_star: vec![0.4],
            methods: vec![MethodId::Enku, MethodId::SdecAlt],
            n_grid: vec![64, 256, 1024, 4096, 16384, 100_000],
            replicates: 30,
            posterior_multiplier: 6,
            seed: 1004,
            spec_seed: 104,
        },
        "obsdep" => ExperimentConfig {
            name: "obsdep".into(),
            model: ModelConfig::Product {
                r: Scalar1d::Uniform { lo: 0.0, hi: 1.0 },
                f: ScalarFn::OnePlusSquare,
            },
            y_star: vec![0.5],
            methods: vec![MethodId::Enku, MethodId::ObsDep],
            n_grid: DEFAULT_GRID.to_vec(),
            replicates: 30,
            posterior_multiplier: 6,
            seed: 1005,
            spec_seed: 105,
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset {other:?}; expected one of {PRESET_NAMES:?}"
            )))
        }
    };
    Ok(cfg)
}
