//! Resource accounting and power-law fits over it.

use std::ops::{Add, AddAssign};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::kernel::{mean_inner, KernelSpec};
use crate::pipeline::{estimate_k, Estimator, QmePipelineConfig};
use crate::rng::derive_seed;
use crate::sample::Sample;

/// Abstract resource counters. One swap shot counts as one unit regardless of
/// the simulated dimension. `wall_time_ns` is informational only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub kernel_evals: u64,
    pub state_preps: u64,
    pub swap_shots: u64,
    pub wall_time_ns: u64,
}

impl CostLedger {
    pub fn merge(&mut self, other: &CostLedger) {
        self.kernel_evals += other.kernel_evals;
        self.state_preps += other.state_preps;
        self.swap_shots += other.swap_shots;
        self.wall_time_ns += other.wall_time_ns;
    }
}

impl Add for CostLedger {
    type Output = CostLedger;

    fn add(mut self, rhs: CostLedger) -> CostLedger {
        self.merge(&rhs);
        self
    }
}

impl AddAssign for CostLedger {
    fn add_assign(&mut self, rhs: CostLedger) {
        self.merge(&rhs);
    }
}

impl std::iter::Sum for CostLedger {
    fn sum<I: Iterator<Item = CostLedger>>(iter: I) -> CostLedger {
        iter.fold(CostLedger::default(), Add::add)
    }
}

/// Least-squares line through `(ln n, ln value)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `value ≈ e^intercept · n^exponent`. Needs at least four points with
/// strictly increasing positive `n` and positive finite values. A perfect
/// fit, including a constant series, reports `r_squared = 1`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || !(points[0].0 > 0.0) {
        return Err(Error::DegenerateFit(
            "sizes must be positive and strictly increasing".into(),
        ));
    }
    if points
        .iter()
        .any(|&(n, v)| !(v > 0.0 && v.is_finite() && n.is_finite()))
    {
        return Err(Error::DegenerateFit("values must be positive and finite".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum();
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_res <= 1e-24 * ss_tot.max(1.0) {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(PowerLawFit {
        exponent,
        intercept,
        r_squared,
    })
}

/// Power-law fit of resource counters against input size.
pub fn scaling_fit(points: &[(u64, u64)]) -> Result<PowerLawFit> {
    if points.iter().any(|&(_, c)| c == 0) {
        return Err(Error::DegenerateFit("counts must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, c)| (n as f64, c as f64)).collect();
    fit_power_law(&pts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostPath {
    Classical,
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub path: CostPath,
    pub ledger: CostLedger,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub shots_per_inner: u64,
    pub rows: Vec<ScalingRow>,
    pub classical_kernel_evals: PowerLawFit,
    pub quantum_kernel_evals: PowerLawFit,
    pub quantum_state_preps: PowerLawFit,
    pub quantum_swap_shots: PowerLawFit,
    /// Classical path spent exactly `n²` kernel evaluations at every size.
    pub classical_is_quadratic: bool,
    /// Quantum path spent exactly `2n` kernel evaluations at every size.
    pub quantum_kernel_is_linear: bool,
    /// Quantum swap shots were the same at every size.
    pub quantum_shots_constant: bool,
}

impl ScalingReport {
    pub fn rows_for(&self, path: CostPath) -> impl Iterator<Item = &ScalingRow> {
        self.rows.iter().filter(move |r| r.path == path)
    }

    pub fn invariants_hold(&self) -> bool {
        self.classical_is_quadratic && self.quantum_kernel_is_linear && self.quantum_shots_constant
    }
}

/// Runs the classical double sum and the sampled quantum estimate of
/// `K(X, Y)` on the same uniform data in `[-σ, σ]` at each size and fits the
/// resulting counters. Size `i` draws `X` and `Y` from streams 0 and 1 of
/// sub-seed `i`. The quantum side always uses swap-test sampling, since the
/// exact simulator overlap has no device cost to count.
pub fn compare_paths(sizes: &[usize], cfg: &QmePipelineConfig, seed: u64, measure_time: bool) -> Result<ScalingReport> {
    if sizes.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
        return Err(Error::DegenerateFit(
            "sizes must be positive and strictly increasing".into(),
        ));
    }
    let cfg = QmePipelineConfig {
        estimator: Estimator::Sampled,
        ..*cfg
    };
    cfg.validate()?;
    let kernel = KernelSpec::gaussian(cfg.sigma)?;
    let data = Distribution::Uniform {
        low: -cfg.sigma,
        high: cfg.sigma,
    };
    let elapsed = |t: Instant| if measure_time { t.elapsed().as_nanos() as u64 } else { 0 };

    let mut rows = Vec::with_capacity(2 * sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let sub = derive_seed(seed, i as u64);
        let x = Sample::scalar(data.sample(n, sub, 0))?;
        let y = Sample::scalar(data.sample(n, sub, 1))?;

        let mut classical = CostLedger::default();
        let t = Instant::now();
        mean_inner(&kernel, &x, &y, &mut classical)?;
        classical.wall_time_ns = elapsed(t);

        let t = Instant::now();
        let mut quantum = estimate_k(&x, &y, &cfg, sub)?.ledger;
        quantum.wall_time_ns = elapsed(t);

        rows.push(ScalingRow {
            n,
            path: CostPath::Classical,
            ledger: classical,
        });
        rows.push(ScalingRow {
            n,
            path: CostPath::Quantum,
            ledger: quantum,
        });
    }

    let series = |path: CostPath, field: fn(&CostLedger) -> u64| -> Vec<(u64, u64)> {
        rows.iter()
            .filter(|r| r.path == path)
            .map(|r| (r.n as u64, field(&r.ledger)))
            .collect()
    };
    let classical_evals = series(CostPath::Classical, |l| l.kernel_evals);
    let quantum_evals = series(CostPath::Quantum, |l| l.kernel_evals);
    let quantum_preps = series(CostPath::Quantum, |l| l.state_preps);
    let quantum_shots = series(CostPath::Quantum, |l| l.swap_shots);

    Ok(ScalingReport {
        sizes: sizes.to_vec(),
        seed,
        shots_per_inner: cfg.shots_per_inner,
        classical_is_quadratic: classical_evals.iter().all(|&(n, c)| c == n * n),
        quantum_kernel_is_linear: quantum_evals.iter().all(|&(n, c)| c == 2 * n),
        quantum_shots_constant: quantum_shots.iter().all(|&(_, s)| s == 3 * cfg.shots_per_inner),
        classical_kernel_evals: scaling_fit(&classical_evals)?,
        quantum_kernel_evals: scaling_fit(&quantum_evals)?,
        quantum_state_preps: scaling_fit(&quantum_preps)?,
        quantum_swap_shots: scaling_fit(&quantum_shots)?,
        rows,
    })
}
