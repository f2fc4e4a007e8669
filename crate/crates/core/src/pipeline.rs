//! Quantum-path estimation of `K(X, Y)` and MMD.
//!
//! The embedding norm `N_X` is not observable from `|ν_X⟩` alone. It is
//! recovered from a reference feature state `|φ(x_ref)⟩`: the classical sum
//! `c = (1/n) Σ k(x_ref, xᵢ)` costs `n` kernel evaluations, the overlap
//! `⟨φ(x_ref)|ν_X⟩ = c / N_X` is measured, and `N_X = c / overlap`. Then
//! `K(X, Y) = N_X N_Y ⟨ν_X|ν_Y⟩` and
//! `MMD² = N_X² + N_Y² - 2 K(X, Y)`, using `⟨ν_X|ν_X⟩ = 1`.
//!
//! Every overlap has an exact variant (simulator inner product, no shots) and
//! a sampled variant (swap test plus positive-root recovery). Uncertainties
//! are propagated to first order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::CostLedger;
use crate::error::{Error, Result};
use crate::fock::{inner, qme_state, CoherentMap, FeatureMap, PureState, TruncationPolicy};
use crate::kernel::{mean_inner, KernelSpec};
use crate::rng::derive_seed;
use crate::sample::Sample;
use crate::swap::{recover_inner_positive, run_swap_shots, ShotEstimate};

/// Where the reference point `x_ref` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ReferenceRule {
    SampleMean,
    Median,
    Point(f64),
}

impl ReferenceRule {
    pub fn select(&self, points: &[f64]) -> f64 {
        match *self {
            ReferenceRule::SampleMean => points.iter().sum::<f64>() / points.len() as f64,
            ReferenceRule::Median => {
                let mut sorted = points.to_vec();
                sorted.sort_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                if sorted.len() % 2 == 1 {
                    sorted[mid]
                } else {
                    0.5 * (sorted[mid - 1] + sorted[mid])
                }
            }
            ReferenceRule::Point(x) => x,
        }
    }
}

impl fmt::Display for ReferenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceRule::SampleMean => f.write_str("mean"),
            ReferenceRule::Median => f.write_str("median"),
            ReferenceRule::Point(x) => write!(f, "point={x}"),
        }
    }
}

/// `mean`, `median` or `point=<x>`.
impl FromStr for ReferenceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(ReferenceRule::SampleMean),
            "median" => Ok(ReferenceRule::Median),
            other => other
                .strip_prefix("point=")
                .and_then(|x| x.trim().parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .map(ReferenceRule::Point)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown reference rule `{other}`"))),
        }
    }
}

impl TryFrom<String> for ReferenceRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReferenceRule> for String {
    fn from(r: ReferenceRule) -> String {
        r.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Overlaps from the simulator's exact inner product.
    Exact,
    /// Overlaps from simulated swap-test shots.
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmePipelineConfig {
    pub sigma: f64,
    pub truncation: TruncationPolicy,
    pub shots_per_inner: u64,
    pub reference: ReferenceRule,
    pub overlap_floor: f64,
    pub estimator: Estimator,
}

impl QmePipelineConfig {
    pub const DEFAULT_SHOTS: u64 = 100_000;
    pub const DEFAULT_OVERLAP_FLOOR: f64 = 0.05;

    /// Sampled estimation with default shots, sample-mean reference and
    /// overlap floor.
    pub fn new(sigma: f64, truncation: TruncationPolicy) -> Self {
        Self {
            sigma,
            truncation,
            shots_per_inner: Self::DEFAULT_SHOTS,
            reference: ReferenceRule::SampleMean,
            overlap_floor: Self::DEFAULT_OVERLAP_FLOOR,
            estimator: Estimator::Sampled,
        }
    }

    /// Default configuration whose truncation covers every point of
    /// `samples` and an explicit reference point, if any.
    pub fn covering(sigma: f64, samples: &[&Sample], reference: ReferenceRule) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidBandwidth(sigma));
        }
        let mut max_abs = samples.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
        if let ReferenceRule::Point(x) = reference {
            max_abs = max_abs.max(x.abs());
        }
        let mut cfg = Self::new(sigma, TruncationPolicy::covering(max_abs / sigma)?);
        cfg.reference = reference;
        Ok(cfg)
    }

    pub fn exact(mut self) -> Self {
        self.estimator = Estimator::Exact;
        self
    }

    pub fn sampled(mut self, shots: u64) -> Self {
        self.estimator = Estimator::Sampled;
        self.shots_per_inner = shots;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidBandwidth(self.sigma));
        }
        self.truncation.validate()?;
        if self.shots_per_inner == 0 {
            return Err(Error::InvalidShots);
        }
        if !(self.overlap_floor > 0.0 && self.overlap_floor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "overlap_floor must lie in (0, 1), got {}",
                self.overlap_floor
            )));
        }
        Ok(())
    }

    fn kernel(&self) -> KernelSpec {
        KernelSpec::gaussian(self.sigma).expect("sigma validated")
    }

    fn overlap(&self, a: &PureState, b: &PureState, seed: u64, ledger: &mut CostLedger) -> Result<ShotEstimate> {
        match self.estimator {
            Estimator::Exact => Ok(ShotEstimate::exact(inner(a, b)?.re, seed)),
            Estimator::Sampled => {
                let sq = run_swap_shots(a, b, self.shots_per_inner, seed, ledger)?;
                Ok(recover_inner_positive(&sq))
            }
        }
    }
}

/// Normalization `N_X` recovered through a reference state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub estimate: ShotEstimate,
    pub x_ref: f64,
    /// `(1/n) Σ k(x_ref, xᵢ)`.
    pub c: f64,
    /// `⟨φ(x_ref)|ν_X⟩`.
    pub overlap: ShotEstimate,
    pub ledger: CostLedger,
}

fn norm_from_state(
    x: &Sample,
    nu: &PureState,
    cfg: &QmePipelineConfig,
    seed: u64,
    ledger: &mut CostLedger,
) -> Result<NormEstimate> {
    let points = x.scalars()?;
    let x_ref = cfg.reference.select(points);
    let map = CoherentMap { sigma: cfg.sigma };
    let mut local = CostLedger::default();

    let reference = Sample::scalar(vec![x_ref])?;
    let c = mean_inner(&cfg.kernel(), &reference, x, &mut local)?;
    let ref_state = map.embed(x_ref, nu.dim(), &cfg.truncation)?;
    local.state_preps += 1;

    let overlap = cfg.overlap(&ref_state, nu, seed, &mut local)?;
    if !(overlap.value >= cfg.overlap_floor) {
        return Err(Error::OverlapTooSmall {
            overlap: overlap.value,
            floor: cfg.overlap_floor,
        });
    }
    let value = c / overlap.value;
    let stderr = c * overlap.stderr / (overlap.value * overlap.value);
    ledger.merge(&local);
    Ok(NormEstimate {
        estimate: ShotEstimate {
            value,
            stderr,
            ..overlap
        },
        x_ref,
        c,
        overlap,
        ledger: local,
    })
}

/// `N_X` from one classical `O(n)` sum and one overlap with the reference
/// state. Fails with [`Error::OverlapTooSmall`] when the recovered overlap is
/// below `cfg.overlap_floor`.
pub fn estimate_norm_via_reference(x: &Sample, cfg: &QmePipelineConfig, seed: u64) -> Result<NormEstimate> {
    cfg.validate()?;
    let mut ledger = CostLedger::default();
    let nu = qme_state(x, cfg.sigma, &cfg.truncation, &mut ledger)?;
    let mut norm = norm_from_state(x, &nu, cfg, derive_seed(seed, 0), &mut ledger)?;
    norm.ledger = ledger;
    Ok(norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KxyEstimate {
    pub value: f64,
    pub stderr: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub x_ref: f64,
    pub y_ref: f64,
    pub norm_x: ShotEstimate,
    pub norm_y: ShotEstimate,
    pub overlap_ref_x: ShotEstimate,
    pub overlap_ref_y: ShotEstimate,
    pub overlap_xy: ShotEstimate,
    pub clamped: bool,
    pub seed: u64,
    pub ledger: CostLedger,
}

/// `K(X, Y) = N_X N_Y ⟨ν_X|ν_Y⟩` with both norms from reference states.
///
/// Spends `|X| + |Y|` kernel evaluations, `|X| + |Y| + 2` state preparations
/// and, when sampled, `3 · shots_per_inner` swap shots. Sub-seeds 0, 1 and 2
/// of `seed` drive the `X`-reference, `Y`-reference and `X`–`Y` overlaps.
pub fn estimate_k(x: &Sample, y: &Sample, cfg: &QmePipelineConfig, seed: u64) -> Result<KxyEstimate> {
    cfg.validate()?;
    let mut ledger = CostLedger::default();
    let nu_x = qme_state(x, cfg.sigma, &cfg.truncation, &mut ledger)?;
    let nu_y = qme_state(y, cfg.sigma, &cfg.truncation, &mut ledger)?;
    let nx = norm_from_state(x, &nu_x, cfg, derive_seed(seed, 0), &mut ledger)?;
    let ny = norm_from_state(y, &nu_y, cfg, derive_seed(seed, 1), &mut ledger)?;
    let oxy = cfg.overlap(&nu_x, &nu_y, derive_seed(seed, 2), &mut ledger)?;

    let value = (nx.c / nx.overlap.value) * (ny.c / ny.overlap.value) * oxy.value;
    let rel = |e: &ShotEstimate| if e.value == 0.0 { 0.0 } else { e.stderr / e.value };
    let stderr = value.abs() * (rel(&nx.estimate).powi(2) + rel(&ny.estimate).powi(2) + rel(&oxy).powi(2)).sqrt();
    let clamped = nx.overlap.clamped || ny.overlap.clamped || oxy.clamped;
    Ok(KxyEstimate {
        value,
        stderr,
        c_x: nx.c,
        c_y: ny.c,
        x_ref: nx.x_ref,
        y_ref: ny.x_ref,
        norm_x: nx.estimate,
        norm_y: ny.estimate,
        overlap_ref_x: nx.overlap,
        overlap_ref_y: ny.overlap,
        overlap_xy: oxy,
        clamped,
        seed,
        ledger,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmdQuantumEstimate {
    pub estimate: ShotEstimate,
    pub k: KxyEstimate,
}

/// Biased MMD² as `N_X² + N_Y² - 2 K(X, Y)`, reusing the norms of the
/// `K(X, Y)` estimate. The value is not clamped.
pub fn estimate_mmd_sq(x: &Sample, y: &Sample, cfg: &QmePipelineConfig, seed: u64) -> Result<MmdQuantumEstimate> {
    let k = estimate_k(x, y, cfg, seed)?;
    let (nx, ny, o) = (k.norm_x.value, k.norm_y.value, k.overlap_xy.value);
    let value = nx * nx + ny * ny - 2.0 * k.value;
    let d_nx = 2.0 * nx - 2.0 * ny * o;
    let d_ny = 2.0 * ny - 2.0 * nx * o;
    let d_o = -2.0 * nx * ny;
    let stderr =
        ((d_nx * k.norm_x.stderr).powi(2) + (d_ny * k.norm_y.stderr).powi(2) + (d_o * k.overlap_xy.stderr).powi(2))
            .sqrt();
    let shots = match cfg.estimator {
        Estimator::Exact => 0,
        Estimator::Sampled => 3 * cfg.shots_per_inner,
    };
    Ok(MmdQuantumEstimate {
        estimate: ShotEstimate {
            value,
            shots,
            stderr,
            seed,
            clamped: k.clamped,
        },
        k,
    })
}
