//! Simulated swap test.
//!
//! The ancilla reads 0 with probability `p0 = (1 + |⟨a|b⟩|²) / 2`. Outcomes are
//! sampled directly from that law rather than by simulating the controlled
//! swap on the joint register. Shots are drawn in batches of [`SHOT_BATCH`];
//! batch `i` uses ChaCha8 stream `i` keyed by the estimate's seed, and each
//! outcome is one `rand::distr::Bernoulli(p0)` draw (outcome 0 iff
//! `next_u64() < p0 · 2⁶⁴`, always 0 when `p0 = 1`). Batch counts are summed,
//! so results do not depend on how batches are scheduled.

use rand::distr::{Bernoulli, Distribution as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostLedger;
use crate::error::{Error, Result};
use crate::fock::{inner, PureState};
use crate::rng::stream_rng;

pub const SHOT_BATCH: u64 = 1 << 16;

/// A Monte-Carlo estimate. `shots == 0` marks an exact (noise-free) value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub value: f64,
    pub shots: u64,
    pub stderr: f64,
    pub seed: u64,
    pub clamped: bool,
}

impl ShotEstimate {
    pub fn exact(value: f64, seed: u64) -> Self {
        Self {
            value,
            shots: 0,
            stderr: 0.0,
            seed,
            clamped: false,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }
}

/// `(p1, p0)` from a squared overlap, with `p0` set to `1 - p1` so the pair
/// sums to one exactly.
pub fn probabilities_from_overlap_sq(overlap_sq: f64) -> (f64, f64) {
    let f = overlap_sq.clamp(0.0, 1.0);
    let p1 = (1.0 - f) / 2.0;
    (1.0 - p1, p1)
}

/// Ancilla outcome probabilities `(p0, p1)` of a swap test on `a` and `b`.
pub fn swap_probabilities(a: &PureState, b: &PureState) -> Result<(f64, f64)> {
    let overlap = inner(a, b)?;
    Ok(probabilities_from_overlap_sq(overlap.norm_sqr()))
}

/// Number of 0 outcomes among `shots` Bernoulli(`p0`) draws.
pub fn count_zero_outcomes(p0: f64, shots: u64, seed: u64) -> u64 {
    let bernoulli = Bernoulli::new(p0.clamp(0.0, 1.0)).expect("p0 clamped to [0, 1]");
    let batches = shots.div_ceil(SHOT_BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let len = SHOT_BATCH.min(shots - b * SHOT_BATCH);
            (0..len).filter(|_| bernoulli.sample(&mut rng)).count() as u64
        })
        .sum()
}

/// Estimate of `2 p0 - 1` from sampled outcomes, with
/// `stderr = 2 sqrt(p̂0 (1 - p̂0) / shots)`. Not clamped.
pub fn estimate_from_p0(p0: f64, shots: u64, seed: u64) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let zeros = count_zero_outcomes(p0, shots, seed);
    let p_hat = zeros as f64 / shots as f64;
    Ok(ShotEstimate {
        value: 2.0 * p_hat - 1.0,
        shots,
        stderr: 2.0 * (p_hat * (1.0 - p_hat) / shots as f64).sqrt(),
        seed,
        clamped: false,
    })
}

/// Swap-test estimate of `|⟨a|b⟩|²` from `shots` simulated measurements.
/// Records `shots` swap shots.
pub fn run_swap_shots(
    a: &PureState,
    b: &PureState,
    shots: u64,
    seed: u64,
    ledger: &mut CostLedger,
) -> Result<ShotEstimate> {
    let (p0, _) = swap_probabilities(a, b)?;
    let est = estimate_from_p0(p0, shots, seed)?;
    ledger.swap_shots += shots;
    Ok(est)
}

/// `⟨a|b⟩ = sqrt(|⟨a|b⟩|²)` for overlaps known to be positive.
///
/// Negative squared estimates are clamped to zero and flagged. The standard
/// error follows the delta method `se / (2 sqrt(v))` while `v > se`; closer to
/// zero it becomes the interval width `sqrt(v⁺ + se) - sqrt((v - se)⁺)`.
pub fn recover_inner_positive(est: &ShotEstimate) -> ShotEstimate {
    let v = est.value.max(0.0);
    let value = v.sqrt();
    let stderr = if est.value > est.stderr {
        if est.stderr == 0.0 {
            0.0
        } else {
            est.stderr / (2.0 * value)
        }
    } else {
        (v + est.stderr).sqrt() - (est.value - est.stderr).max(0.0).sqrt()
    };
    ShotEstimate {
        value,
        shots: est.shots,
        stderr,
        seed: est.seed,
        clamped: est.clamped || est.value < 0.0,
    }
}
