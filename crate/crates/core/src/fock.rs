//! Pure states on a truncated Fock basis and the coherent-state feature map.
//!
//! The feature state of a scalar `x` at bandwidth `σ` is the coherent state
//! with real amplitude `u = x / σ`:
//!
//! ```text
//! |φ(x)⟩ = e^{-u²/2} Σ_n uⁿ / √(n!) |n⟩,      ⟨φ(x)|φ(x')⟩ = exp(-(x - x')² / 2σ²)
//! ```
//!
//! Only the first `d` Fock levels are kept. The discarded probability mass is
//! the Poisson(`u²`) tail beyond `d`; it is recorded on the state and the
//! truncated vector is renormalized.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cost::CostLedger;
use crate::error::{Error, Result};
use crate::json;
use crate::sample::Sample;

/// Normalization tolerance accepted when importing amplitudes from outside.
const IMPORT_NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    lost_tail_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    dim: usize,
    amplitudes: Vec<[f64; 2]>,
    lost_tail_mass: f64,
}

fn norm_sqr(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

impl PureState {
    /// Normalizes `amplitudes` to a unit vector.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::normalized(amplitudes, 0.0)
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// The Fock state `|index⟩` in a `dim`-level space.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidInput(format!(
                "basis index {index} outside dimension {dim}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            lost_tail_mass: 0.0,
        })
    }

    fn normalized(mut amplitudes: Vec<Complex64>, lost_tail_mass: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidInput("a state needs at least one level".into()));
        }
        if let Some(i) = amplitudes.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                value: amplitudes[i].norm(),
            });
        }
        let norm = norm_sqr(&amplitudes).sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::ZeroSuperposition);
        }
        let scale = 1.0 / norm;
        for a in &mut amplitudes {
            *a *= scale;
        }
        Ok(Self {
            amplitudes,
            lost_tail_mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Probability mass discarded by truncation before renormalizing.
    pub fn lost_tail_mass(&self) -> f64 {
        self.lost_tail_mass
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    /// `{"dim", "amplitudes": [[re, im], ...], "lost_tail_mass"}`.
    pub fn to_json(&self) -> String {
        json::to_string(&self.record()).expect("state records always serialize")
    }

    fn record(&self) -> StateRecord {
        StateRecord {
            dim: self.dim(),
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
            lost_tail_mass: self.lost_tail_mass,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: StateRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        if record.dim != record.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                left: record.dim,
                right: record.amplitudes.len(),
            });
        }
        if !(0.0..=1.0).contains(&record.lost_tail_mass) {
            return Err(Error::InvalidInput(format!(
                "lost_tail_mass {} outside [0, 1]",
                record.lost_tail_mass
            )));
        }
        let amplitudes: Vec<Complex64> = record
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        let n2 = norm_sqr(&amplitudes);
        if amplitudes.is_empty() || !((n2 - 1.0).abs() <= IMPORT_NORM_TOL) {
            return Err(Error::NotNormalized(n2));
        }
        if (n2 - 1.0).abs() <= 1e-14 {
            return Ok(Self {
                amplitudes,
                lost_tail_mass: record.lost_tail_mass,
            });
        }
        Self::normalized(amplitudes, record.lost_tail_mass)
    }
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.record().serialize(serializer)
    }
}

/// How much Fock space a run keeps: the largest tolerated lost tail mass and
/// the largest `|x| / σ` the truncation has to cover.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub tol: f64,
    pub x_abs_max_over_sigma: f64,
}

impl TruncationPolicy {
    pub const DEFAULT_TOL: f64 = 1e-12;

    pub fn new(tol: f64, x_abs_max_over_sigma: f64) -> Result<Self> {
        let policy = Self {
            tol,
            x_abs_max_over_sigma,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Default tolerance, covering data up to `x_abs_max_over_sigma`.
    pub fn covering(x_abs_max_over_sigma: f64) -> Result<Self> {
        Self::new(Self::DEFAULT_TOL, x_abs_max_over_sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidTolerance(self.tol));
        }
        if !(self.x_abs_max_over_sigma >= 0.0 && self.x_abs_max_over_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "x_abs_max_over_sigma must be finite and nonnegative, got {}",
                self.x_abs_max_over_sigma
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        min_truncation_dim(self.x_abs_max_over_sigma, self.tol)
    }

    pub fn check_ratio(&self, ratio: f64) -> Result<()> {
        if ratio <= self.x_abs_max_over_sigma {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                ratio,
                max: self.x_abs_max_over_sigma,
            })
        }
    }
}

/// `tails[k] = P(N >= k)` for `N ~ Poisson(lambda)`, for `k` up to a cutoff
/// past `min_len` and `2 lambda` where the terms have dropped below
/// `exp(log_floor)`. Terms come from the log-domain recurrence
/// `ln p(n+1) = ln p(n) + ln λ - ln(n + 1)` and are summed from the far end
/// so small tails keep full relative precision.
fn poisson_tails(lambda: f64, min_len: usize, log_floor: f64) -> Vec<f64> {
    let ln_lambda = lambda.ln();
    let mut logs = Vec::new();
    let mut log_p = -lambda;
    let mut n = 0usize;
    loop {
        logs.push(log_p);
        if n >= min_len && (n as f64) > 2.0 * lambda && log_p < log_floor {
            break;
        }
        n += 1;
        log_p += ln_lambda - (n as f64).ln();
    }
    let mut tails = vec![0.0; logs.len() + 1];
    for k in (0..logs.len()).rev() {
        tails[k] = tails[k + 1] + logs[k].exp();
    }
    tails
}

/// Probability mass of a coherent state with amplitude `u` beyond the first
/// `dim` Fock levels.
pub fn coherent_tail_mass(u: f64, dim: usize) -> f64 {
    poisson_tails(u * u, dim, -745.0)[dim]
}

/// Smallest truncation `d >= 1` whose Poisson(`u²`) tail beyond `d` is at most
/// `tol` for every `|u| <= u_max`. The tail grows with `u²`, so checking
/// `u_max` suffices.
///
/// Panics unless `0 < tol < 1`.
pub fn min_truncation_dim(u_max: f64, tol: f64) -> usize {
    assert!(tol > 0.0 && tol < 1.0, "truncation tolerance must lie in (0, 1)");
    assert!(u_max.is_finite(), "u_max must be finite");
    let tails = poisson_tails(u_max * u_max, 1, tol.ln() - 40.0);
    (1..tails.len())
        .find(|&d| tails[d] <= tol)
        .expect("the tail series ends far below tol")
}

/// Unnormalized truncated amplitudes `e^{-u²/2} uⁿ / √(n!)`, `n < dim`.
///
/// Built with `a(n+1) = a(n) u / √(n+1)`. When `e^{-u²/2}` would underflow,
/// the same recurrence runs on logarithms instead.
pub fn coherent_amplitudes(u: f64, dim: usize) -> Vec<f64> {
    let mut amps = Vec::with_capacity(dim);
    if u == 0.0 {
        amps.resize(dim, 0.0);
        if let Some(a) = amps.first_mut() {
            *a = 1.0;
        }
        return amps;
    }
    let log_a0 = -0.5 * u * u;
    if log_a0 > -700.0 {
        let mut a = log_a0.exp();
        for n in 0..dim {
            amps.push(a);
            a *= u / ((n + 1) as f64).sqrt();
        }
    } else {
        let ln_u = u.abs().ln();
        let mut log_a = log_a0;
        for n in 0..dim {
            let mag = log_a.exp();
            amps.push(if u < 0.0 && n % 2 == 1 { -mag } else { mag });
            log_a += ln_u - 0.5 * ((n + 1) as f64).ln();
        }
    }
    amps
}

fn validate_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(sigma))
    }
}

fn coherent_unchecked(u: f64, dim: usize) -> PureState {
    let amps = coherent_amplitudes(u, dim)
        .into_iter()
        .map(|a| Complex64::new(a, 0.0))
        .collect();
    PureState::normalized(amps, coherent_tail_mass(u, dim))
        .expect("a truncated coherent state keeps its dominant levels")
}

/// Coherent feature state of `x` at bandwidth `sigma` on `dim` levels.
/// Refuses a `dim` below `min_truncation_dim(|x| / sigma, tol)`.
pub fn coherent_feature(x: f64, sigma: f64, dim: usize, tol: f64) -> Result<PureState> {
    validate_sigma(sigma)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { index: 0, value: x });
    }
    let u = x / sigma;
    let required = min_truncation_dim(u.abs(), tol);
    if dim < required {
        return Err(Error::TruncationTooSmall {
            required,
            got: dim,
            ratio: u.abs(),
            tol,
        });
    }
    Ok(coherent_unchecked(u, dim))
}

/// A map from scalar data to normalized states on a fixed number of levels.
pub trait FeatureMap {
    /// Levels needed to honour `policy`.
    fn dim(&self, policy: &TruncationPolicy) -> usize;

    fn embed(&self, x: f64, dim: usize, policy: &TruncationPolicy) -> Result<PureState>;
}

/// The coherent-state map at bandwidth `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentMap {
    pub sigma: f64,
}

impl FeatureMap for CoherentMap {
    fn dim(&self, policy: &TruncationPolicy) -> usize {
        policy.dim()
    }

    fn embed(&self, x: f64, dim: usize, policy: &TruncationPolicy) -> Result<PureState> {
        validate_sigma(self.sigma)?;
        let u = x / self.sigma;
        policy.check_ratio(u.abs())?;
        Ok(coherent_unchecked(u, dim))
    }
}

/// L2-normalized `Σ wᵢ |stateᵢ⟩`, accumulated in index order.
pub fn superpose(states: &[PureState], weights: &[f64]) -> Result<PureState> {
    if states.len() != weights.len() {
        return Err(Error::LengthMismatch {
            states: states.len(),
            weights: weights.len(),
        });
    }
    let first = states.first().ok_or(Error::EmptySample)?;
    let dim = first.dim();
    if let Some(s) = states.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: s.dim(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFinite {
            index: i,
            value: weights[i],
        });
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    for (state, &w) in states.iter().zip(weights) {
        for (a, s) in acc.iter_mut().zip(&state.amplitudes) {
            *a += s * w;
        }
    }
    let lost = states.iter().map(|s| s.lost_tail_mass).fold(0.0, f64::max);
    PureState::normalized(acc, lost)
}

/// Empirical embedding of a sample as an equal-weight superposition of
/// feature states. Points are superposed in ascending order so permutations
/// of the same sample give identical amplitudes.
pub fn embed_sample(
    map: &impl FeatureMap,
    x: &Sample,
    policy: &TruncationPolicy,
    ledger: &mut CostLedger,
) -> Result<PureState> {
    policy.validate()?;
    let mut points = x.scalars()?.to_vec();
    points.sort_by(f64::total_cmp);
    let dim = map.dim(policy);
    let states = points
        .iter()
        .map(|&p| map.embed(p, dim, policy))
        .collect::<Result<Vec<_>>>()?;
    let state = superpose(&states, &vec![1.0; states.len()])?;
    ledger.state_preps += x.len() as u64;
    Ok(state)
}

/// The quantum mean embedding `|ν_X⟩` of a scalar sample under the coherent
/// map at bandwidth `sigma`. Records `|X|` state preparations.
pub fn qme_state(x: &Sample, sigma: f64, policy: &TruncationPolicy, ledger: &mut CostLedger) -> Result<PureState> {
    embed_sample(&CoherentMap { sigma }, x, policy, ledger)
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner(a: &PureState, b: &PureState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}
