//! Flags, JSON config files and their resolution into one experiment
//! configuration.
//!
//! A config file is a JSON object whose keys are the long flag names
//! (`{"sigma": 0.5, "sizes": [8, 16], "reference": "point=0.5"}`). Values
//! resolve in the order: command-line flag, config file, `QMELAB_SEED` (seed
//! only), built-in default. The resolved configuration is echoed into every
//! output and can be fed back with `--config` to reproduce a run.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qmelab::{Distribution, KernelFamily, ReferenceRule};

use crate::error::CliError;

pub const SEED_ENV: &str = "QMELAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalPath {
    Classical,
    QuantumExact,
    QuantumSampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Gram,
    Mmd,
    QmeInner,
    Norm,
    Convergence,
    TruncationStudy,
    ShotNoise,
    Scaling,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Gram => "gram",
            Experiment::Mmd => "mmd",
            Experiment::QmeInner => "qme-inner",
            Experiment::Norm => "norm",
            Experiment::Convergence => "convergence",
            Experiment::TruncationStudy => "truncation-study",
            Experiment::ShotNoise => "shot-noise",
            Experiment::Scaling => "scaling",
        }
    }
}

/// Serde adapter for optional values written as their `Display` string.
mod as_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&v.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// JSON config file whose keys mirror these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Kernel family: gaussian, laplacian or linear.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelFamily>,

    /// Kernel bandwidth (also the coherent-map bandwidth).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,

    /// Swap-test shots per estimated inner product.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,

    /// Root seed; falls back to $QMELAB_SEED, then 0.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Repetitions per grid point.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,

    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,

    /// Sample file(s), CSV or JSON; repeat for X then Y.
    #[arg(short, long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<PathBuf>>,

    /// Output file (JSON record, or CSV table for sweeps).
    #[arg(short, long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    /// Evaluation route.
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<EvalPath>,

    /// Reference point rule: mean, median or point=<x>.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceRule>,

    /// Smallest acceptable overlap with the reference state.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_floor: Option<f64>,

    /// Truncation tolerance on the discarded Fock-space mass.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,

    /// Data distribution: gaussian:m,s | uniform:a,b | mixture:p,m1,s1,m2,s2.
    #[arg(long)]
    #[serde(default, with = "as_string", skip_serializing_if = "Option::is_none")]
    pub dist: Option<Distribution>,

    /// Emit the full Gram block.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<bool>,

    /// Largest |x|/sigma covered by the truncation study.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,

    /// Grid points per axis in the truncation study.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,

    /// Comma-separated truncation tolerances for the truncation study.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tols: Option<Vec<f64>>,

    /// Explicit truncation dimension for the truncation study.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,

    /// Comma-separated shot counts for the shot-noise sweep.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_grid: Option<Vec<u64>>,

    /// Measure wall time (makes outputs non-reproducible).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<bool>,
}

macro_rules! prefer {
    ($primary:ident, $fallback:ident; $($field:ident),*) => {
        Settings {
            config: $primary.config.or($fallback.config),
            $($field: $primary.$field.or($fallback.$field),)*
        }
    };
}

fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

impl Settings {
    /// Parses a config file. The top level must be an object.
    pub fn from_json(text: &str) -> Result<Settings, CliError> {
        let bad = |e: serde_json::Error| CliError::Input(format!("config: {e}"));
        let value: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
        if !value.is_object() {
            return Err(CliError::Input("config: top level must be a JSON object".into()));
        }
        serde_json::from_value(value).map_err(bad)
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Field-wise `self` over `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        prefer!(self, fallback; kernel, sigma, shots, seed, trials, sizes, input, output, path,
            reference, overlap_floor, tol, dist, full, u_max, grid_points, tols, dim, shots_grid,
            wall_time)
    }

    /// Merges the config file (if any) and the seed environment variable,
    /// then fills every remaining field with its default for `experiment`.
    pub fn resolve(self, experiment: Experiment, seed_env: Option<&str>) -> Result<Settings, CliError> {
        let mut merged = match &self.config {
            Some(path) => {
                let file = Self::load(path)?;
                self.or(file)
            }
            None => self,
        };
        if merged.seed.is_none() {
            if let Some(text) = seed_env {
                let seed = text
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("{SEED_ENV}={text} is not a u64")))?;
                merged.seed = Some(seed);
            }
        }
        let (sizes, trials, path) = match experiment {
            Experiment::Convergence => (powers_of_two(5, 12), 100, EvalPath::Classical),
            Experiment::Scaling => (powers_of_two(3, 10), 1, EvalPath::QuantumSampled),
            Experiment::ShotNoise => (vec![], 40, EvalPath::QuantumSampled),
            Experiment::QmeInner => (vec![], 1, EvalPath::QuantumExact),
            _ => (vec![], 1, EvalPath::Classical),
        };
        let defaults = Settings {
            config: None,
            kernel: Some(KernelFamily::Gaussian),
            sigma: Some(1.0),
            shots: Some(qmelab::QmePipelineConfig::DEFAULT_SHOTS),
            seed: Some(0),
            trials: Some(trials),
            sizes: Some(sizes),
            input: Some(vec![]),
            output: None,
            path: Some(path),
            reference: Some(ReferenceRule::SampleMean),
            overlap_floor: Some(qmelab::QmePipelineConfig::DEFAULT_OVERLAP_FLOOR),
            tol: Some(qmelab::TruncationPolicy::DEFAULT_TOL),
            dist: Some(Distribution::Gaussian { mean: 0.0, std: 1.0 }),
            full: Some(false),
            u_max: Some(3.0),
            grid_points: Some(61),
            tols: Some(vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12]),
            dim: None,
            shots_grid: Some(vec![100, 1_000, 10_000, 100_000, 1_000_000]),
            wall_time: Some(false),
        };
        Ok(merged.or(defaults))
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON config, with
    /// the output path left out.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&Settings {
            output: None,
            ..self.clone()
        })
        .expect("settings serialize");
        hex::encode(Sha256::digest(&bytes))[..16].to_string()
    }

    pub fn kernel(&self) -> KernelFamily {
        self.kernel.unwrap_or(KernelFamily::Gaussian)
    }
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(1.0)
    }
    pub fn shots(&self) -> u64 {
        self.shots.unwrap_or(qmelab::QmePipelineConfig::DEFAULT_SHOTS)
    }
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(1)
    }
    pub fn sizes(&self) -> &[usize] {
        self.sizes.as_deref().unwrap_or(&[])
    }
    pub fn inputs(&self) -> &[PathBuf] {
        self.input.as_deref().unwrap_or(&[])
    }
    pub fn path(&self) -> EvalPath {
        self.path.unwrap_or(EvalPath::Classical)
    }
    pub fn reference(&self) -> ReferenceRule {
        self.reference.unwrap_or(ReferenceRule::SampleMean)
    }
    pub fn overlap_floor(&self) -> f64 {
        self.overlap_floor
            .unwrap_or(qmelab::QmePipelineConfig::DEFAULT_OVERLAP_FLOOR)
    }
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(qmelab::TruncationPolicy::DEFAULT_TOL)
    }
    pub fn full(&self) -> bool {
        self.full.unwrap_or(false)
    }
    pub fn wall_time(&self) -> bool {
        self.wall_time.unwrap_or(false)
    }
}
