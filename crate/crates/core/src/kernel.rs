//! Exact classical kernel evaluation, empirical mean-embedding inner
//! products and the biased MMD estimator.
//!
//! Every reduction runs in a fixed order: the two samples are first put in a
//! canonical order, each row of the cross block is summed pairwise, and the
//! row sums are combined pairwise again. Results are therefore bit-identical
//! across runs and thread counts, and `mean_inner(X, Y) == mean_inner(Y, X)`
//! holds exactly.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostLedger;
use crate::error::{Error, Result};
use crate::sample::Sample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Laplacian,
    Linear,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
            KernelFamily::Linear => "linear",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelFamily::Gaussian),
            "laplacian" | "laplace" => Ok(KernelFamily::Laplacian),
            "linear" => Ok(KernelFamily::Linear),
            other => Err(Error::InvalidConfig(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// A real-valued kernel: family plus bandwidth. The bandwidth is ignored by
/// the linear kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, sigma: f64) -> Result<Self> {
        let spec = Self { family, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, sigma)
    }

    pub fn laplacian(sigma: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplacian, sigma)
    }

    pub fn linear() -> Self {
        Self {
            family: KernelFamily::Linear,
            sigma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            KernelFamily::Linear => Ok(()),
            _ if self.sigma > 0.0 && self.sigma.is_finite() => Ok(()),
            _ => Err(Error::InvalidBandwidth(self.sigma)),
        }
    }

    /// True for families with `k(x, x) = 1`, the ones that admit a
    /// normalized feature state.
    pub fn is_unit_diagonal(&self) -> bool {
        !matches!(self.family, KernelFamily::Linear)
    }

    // Inputs are assumed finite and of equal length.
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-squared_distance(x, y) / (2.0 * self.sigma * self.sigma)).exp(),
            KernelFamily::Laplacian => (-l1_distance(x, y) / self.sigma).exp(),
            KernelFamily::Linear => compensated_sum(x.iter().zip(y).map(|(a, b)| a * b)),
        }
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 1 {
        let d = x[0] - y[0];
        return d * d;
    }
    compensated_sum(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)))
}

fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 1 {
        return (x[0] - y[0]).abs();
    }
    compensated_sum(x.iter().zip(y).map(|(a, b)| (a - b).abs()))
}

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (tree) sum of `term(lo..hi)` with sequential leaves of at most
/// [`PAIRWISE_BLOCK`] terms.
fn pairwise_sum(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
    if hi - lo <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += term(i);
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term)
    }
}

fn check_point(p: &[f64]) -> Result<()> {
    match p.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite { index: i, value: p[i] }),
        None => Ok(()),
    }
}

pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("points must have at least one coordinate".into()));
    }
    check_point(x)?;
    check_point(y)?;
    Ok(spec.eval_unchecked(x, y))
}

fn canonical_order(x: &Sample, y: &Sample) -> Ordering {
    x.len().cmp(&y.len()).then_with(|| {
        x.values()
            .iter()
            .zip(y.values())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn check_pair(spec: &KernelSpec, x: &Sample, y: &Sample) -> Result<()> {
    spec.validate()?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(())
}

/// Sum of all kernel evaluations between the two samples, in canonical order.
fn cross_sum(spec: &KernelSpec, x: &Sample, y: &Sample) -> f64 {
    let (rows, cols) = if canonical_order(x, y).is_le() { (x, y) } else { (y, x) };
    let row_sums: Vec<f64> = (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let p = rows.point(i);
            pairwise_sum(0, cols.len(), &|j| spec.eval_unchecked(p, cols.point(j)))
        })
        .collect();
    pairwise_sum(0, row_sums.len(), &|i| row_sums[i])
}

/// `K(X, Y) = (1 / (|X| |Y|)) Σ_ij k(x_i, y_j)`, the inner product of the two
/// empirical kernel mean embeddings. Records `|X| · |Y|` kernel evaluations.
pub fn mean_inner(spec: &KernelSpec, x: &Sample, y: &Sample, ledger: &mut CostLedger) -> Result<f64> {
    check_pair(spec, x, y)?;
    let total = cross_sum(spec, x, y);
    ledger.kernel_evals += (x.len() * y.len()) as u64;
    Ok(total / (x.len() as f64 * y.len() as f64))
}

/// Full cross Gram block `[k(x_i, y_j)]`, rows indexed by `x`.
pub fn gram(spec: &KernelSpec, x: &Sample, y: &Sample, ledger: &mut CostLedger) -> Result<Vec<Vec<f64>>> {
    check_pair(spec, x, y)?;
    let block = x
        .points()
        .map(|p| y.points().map(|q| spec.eval_unchecked(p, q)).collect())
        .collect();
    ledger.kernel_evals += (x.len() * y.len()) as u64;
    Ok(block)
}

/// Biased squared MMD. `value` is clamped at zero; `raw` keeps the unclamped
/// floating-point result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MmdValue {
    pub value: f64,
    pub raw: f64,
}

pub fn mmd_biased_sq(spec: &KernelSpec, x: &Sample, y: &Sample, ledger: &mut CostLedger) -> Result<MmdValue> {
    check_pair(spec, x, y)?;
    let kxx = mean_inner(spec, x, x, ledger)?;
    let kxy = mean_inner(spec, x, y, ledger)?;
    let kyy = mean_inner(spec, y, y, ledger)?;
    let raw = kxx - 2.0 * kxy + kyy;
    Ok(MmdValue {
        value: raw.max(0.0),
        raw,
    })
}

/// Norm of an empirical kernel mean embedding, `sqrt(K(X, X))`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct EmbeddingNorm(pub f64);

impl EmbeddingNorm {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn embedding_norm(spec: &KernelSpec, x: &Sample, ledger: &mut CostLedger) -> Result<EmbeddingNorm> {
    let k = mean_inner(spec, x, x, ledger)?;
    Ok(EmbeddingNorm(k.max(0.0).sqrt()))
}
