//! One function per subcommand. Each takes resolved settings and returns
//! its JSON record and optional CSV table.

use rayon::prelude::*;
use serde::Serialize;

use qmelab::cost::ScalingReport;
use qmelab::fock::coherent_feature;
use qmelab::io::read_sample;
use qmelab::kernel::gram;
use qmelab::rng::derive_seed;
use qmelab::{
    compare_paths, embedding_norm, estimate_mmd_sq, estimate_norm_via_reference, fit_power_law, inner, mean_inner,
    min_truncation_dim, mmd_biased_sq, qme_state, recover_inner_positive, run_swap_shots, CostLedger, KernelFamily,
    KernelSpec, MmdQuantumEstimate, NormEstimate, PowerLawFit, PureState, QmePipelineConfig, Sample, ShotEstimate,
    TruncationPolicy,
};

use crate::error::CliError;
use crate::output::{real, Output, Provenance, Table};
use crate::settings::{EvalPath, Experiment, Settings};

pub fn run(experiment: Experiment, settings: &Settings) -> Result<Output, CliError> {
    match experiment {
        Experiment::Gram => cmd_gram(settings),
        Experiment::Mmd => cmd_mmd(settings),
        Experiment::QmeInner => cmd_qme_inner(settings),
        Experiment::Norm => cmd_norm(settings),
        Experiment::Convergence => cmd_convergence(settings),
        Experiment::TruncationStudy => cmd_truncation_study(settings),
        Experiment::ShotNoise => cmd_shot_noise(settings),
        Experiment::Scaling => cmd_scaling(settings),
    }
}

fn kernel(settings: &Settings) -> Result<KernelSpec, CliError> {
    Ok(KernelSpec::new(settings.kernel(), settings.sigma())?)
}

fn load_one(settings: &Settings) -> Result<Sample, CliError> {
    match settings.inputs() {
        [x] => Ok(read_sample(x)?),
        [] => Err(CliError::Input("missing --input".into())),
        _ => Err(CliError::Input("expected exactly one --input".into())),
    }
}

/// X and Y from one or two inputs; a single input is paired with itself.
fn load_pair(settings: &Settings) -> Result<(Sample, Sample), CliError> {
    match settings.inputs() {
        [x] => {
            let x = read_sample(x)?;
            Ok((x.clone(), x))
        }
        [x, y] => Ok((read_sample(x)?, read_sample(y)?)),
        [] => Err(CliError::Input("missing --input".into())),
        _ => Err(CliError::Input("expected one or two --input files".into())),
    }
}

fn require_gaussian(settings: &Settings) -> Result<(), CliError> {
    if settings.kernel() == KernelFamily::Gaussian {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "the quantum path realizes the gaussian kernel only, not {}",
            settings.kernel()
        )))
    }
}

/// Pipeline configuration whose truncation covers `samples` (and an explicit
/// reference point).
fn pipeline(settings: &Settings, samples: &[&Sample]) -> Result<QmePipelineConfig, CliError> {
    require_gaussian(settings)?;
    let mut cfg = QmePipelineConfig::covering(settings.sigma(), samples, settings.reference())?;
    cfg.truncation.tol = settings.tol();
    cfg.overlap_floor = settings.overlap_floor();
    cfg = match settings.path() {
        EvalPath::QuantumSampled => cfg.sampled(settings.shots()),
        _ => cfg.exact(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn sampled(settings: &Settings) -> bool {
    settings.path() == EvalPath::QuantumSampled
}

#[derive(Serialize)]
struct GramResult {
    kernel: KernelSpec,
    n_x: usize,
    n_y: usize,
    k_xy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gram: Option<Vec<Vec<f64>>>,
    ledger: CostLedger,
}

pub fn cmd_gram(settings: &Settings) -> Result<Output, CliError> {
    let spec = kernel(settings)?;
    let (x, y) = load_pair(settings)?;
    let mut ledger = CostLedger::default();
    let k_xy = mean_inner(&spec, &x, &y, &mut ledger)?;
    let block = if settings.full() {
        Some(gram(&spec, &x, &y, &mut CostLedger::default())?)
    } else {
        None
    };
    let table = match &block {
        Some(block) => {
            let mut t = Table::new(&["i", "j", "k"]);
            for (i, row) in block.iter().enumerate() {
                for (j, &k) in row.iter().enumerate() {
                    t.push(vec![i.to_string(), j.to_string(), real(k)]);
                }
            }
            t
        }
        None => {
            let mut t = Table::new(&["k_xy"]);
            t.push(vec![real(k_xy)]);
            t
        }
    };
    let result = GramResult {
        kernel: spec,
        n_x: x.len(),
        n_y: y.len(),
        k_xy,
        gram: block,
        ledger,
    };
    Output::new(
        "gram",
        &result,
        &Provenance::new(settings, false),
        settings,
        Some(table),
    )
}

#[derive(Serialize)]
struct MmdResult {
    path: EvalPath,
    value: f64,
    raw: f64,
    stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantum: Option<MmdQuantumEstimate>,
    ledger: CostLedger,
}

pub fn cmd_mmd(settings: &Settings) -> Result<Output, CliError> {
    let (x, y) = load_pair(settings)?;
    let result = match settings.path() {
        EvalPath::Classical => {
            let mut ledger = CostLedger::default();
            let m = mmd_biased_sq(&kernel(settings)?, &x, &y, &mut ledger)?;
            MmdResult {
                path: EvalPath::Classical,
                value: m.value,
                raw: m.raw,
                stderr: 0.0,
                quantum: None,
                ledger,
            }
        }
        path => {
            let cfg = pipeline(settings, &[&x, &y])?;
            let q = estimate_mmd_sq(&x, &y, &cfg, settings.seed())?;
            MmdResult {
                path,
                value: q.estimate.value.max(0.0),
                raw: q.estimate.value,
                stderr: q.estimate.stderr,
                ledger: q.k.ledger,
                quantum: Some(q),
            }
        }
    };
    let mut table = Table::new(&["path", "mmd_sq", "raw", "stderr"]);
    table.push(vec![
        path_name(result.path).into(),
        real(result.value),
        real(result.raw),
        real(result.stderr),
    ]);
    Output::new(
        "mmd",
        &result,
        &Provenance::new(settings, sampled(settings)),
        settings,
        Some(table),
    )
}

fn path_name(p: EvalPath) -> &'static str {
    match p {
        EvalPath::Classical => "classical",
        EvalPath::QuantumExact => "quantum-exact",
        EvalPath::QuantumSampled => "quantum-sampled",
    }
}

#[derive(Serialize)]
struct StatePair {
    x: PureState,
    y: PureState,
}

#[derive(Serialize)]
struct QmeInnerResult {
    path: EvalPath,
    /// `⟨ν_X|ν_Y⟩`.
    overlap: ShotEstimate,
    /// `|⟨ν_X|ν_Y⟩|²` as measured (sampled path) or computed.
    overlap_sq: ShotEstimate,
    dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    states: Option<StatePair>,
    ledger: CostLedger,
}

pub fn cmd_qme_inner(settings: &Settings) -> Result<Output, CliError> {
    let (x, y) = load_pair(settings)?;
    let seed = settings.seed();
    let mut ledger = CostLedger::default();
    let result = match settings.path() {
        EvalPath::Classical => {
            let spec = kernel(settings)?;
            require_gaussian(settings)?;
            let k = mean_inner(&spec, &x, &y, &mut ledger)?;
            let nx = embedding_norm(&spec, &x, &mut ledger)?.value();
            let ny = embedding_norm(&spec, &y, &mut ledger)?.value();
            let o = k / (nx * ny);
            QmeInnerResult {
                path: EvalPath::Classical,
                overlap: ShotEstimate::exact(o, seed),
                overlap_sq: ShotEstimate::exact(o * o, seed),
                dim: None,
                states: None,
                ledger,
            }
        }
        path => {
            let cfg = pipeline(settings, &[&x, &y])?;
            let vx = qme_state(&x, cfg.sigma, &cfg.truncation, &mut ledger)?;
            let vy = qme_state(&y, cfg.sigma, &cfg.truncation, &mut ledger)?;
            let (overlap, overlap_sq) = if path == EvalPath::QuantumSampled {
                let sq = run_swap_shots(&vx, &vy, settings.shots(), seed, &mut ledger)?;
                (recover_inner_positive(&sq), sq)
            } else {
                let o = inner(&vx, &vy)?;
                (ShotEstimate::exact(o.re, seed), ShotEstimate::exact(o.norm_sqr(), seed))
            };
            QmeInnerResult {
                path,
                overlap,
                overlap_sq,
                dim: Some(vx.dim()),
                states: settings.full().then_some(StatePair { x: vx, y: vy }),
                ledger,
            }
        }
    };
    let mut table = Table::new(&[
        "path",
        "overlap",
        "overlap_stderr",
        "overlap_sq",
        "overlap_sq_stderr",
        "clamped",
    ]);
    table.push(vec![
        path_name(result.path).into(),
        real(result.overlap.value),
        real(result.overlap.stderr),
        real(result.overlap_sq.value),
        real(result.overlap_sq.stderr),
        result.overlap.clamped.to_string(),
    ]);
    Output::new(
        "qme-inner",
        &result,
        &Provenance::new(settings, sampled(settings)),
        settings,
        Some(table),
    )
}

#[derive(Serialize)]
struct NormResult {
    path: EvalPath,
    value: f64,
    stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<NormEstimate>,
    ledger: CostLedger,
}

pub fn cmd_norm(settings: &Settings) -> Result<Output, CliError> {
    let x = load_one(settings)?;
    let result = match settings.path() {
        EvalPath::Classical => {
            let mut ledger = CostLedger::default();
            let n = embedding_norm(&kernel(settings)?, &x, &mut ledger)?;
            NormResult {
                path: EvalPath::Classical,
                value: n.value(),
                stderr: 0.0,
                reference: None,
                ledger,
            }
        }
        path => {
            let cfg = pipeline(settings, &[&x])?;
            let n = estimate_norm_via_reference(&x, &cfg, settings.seed())?;
            NormResult {
                path,
                value: n.estimate.value,
                stderr: n.estimate.stderr,
                ledger: n.ledger,
                reference: Some(n),
            }
        }
    };
    let mut table = Table::new(&["path", "norm", "stderr"]);
    table.push(vec![
        path_name(result.path).into(),
        real(result.value),
        real(result.stderr),
    ]);
    Output::new(
        "norm",
        &result,
        &Provenance::new(settings, sampled(settings)),
        settings,
        Some(table),
    )
}

fn check_grid(name: &str, len: usize) -> Result<(), CliError> {
    if len < 4 {
        Err(CliError::Input(format!(
            "{name} needs at least 4 values for a log-log fit, got {len}"
        )))
    } else {
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

#[derive(Serialize)]
struct MedianRow {
    n: usize,
    median_mmd: f64,
}

#[derive(Serialize)]
struct ConvergenceResult {
    distribution: String,
    kernel: KernelSpec,
    trials: usize,
    medians: Vec<MedianRow>,
    fit: PowerLawFit,
}

/// Median over trials of the biased MMD between two independent samples of
/// the same distribution, per size, and its log-log slope. Trial `t` at size
/// index `i` draws X and Y from streams 0 and 1 of
/// `derive_seed(derive_seed(seed, i), t)`.
pub fn cmd_convergence(settings: &Settings) -> Result<Output, CliError> {
    let spec = kernel(settings)?;
    let dist = settings.dist.expect("resolved");
    dist.validate()?;
    let trials = settings.trials();
    if trials == 0 {
        return Err(CliError::Input("trials must be at least 1".into()));
    }
    let sizes = settings.sizes();
    check_grid("sizes", sizes.len())?;
    if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
        return Err(CliError::Input("sizes must be positive and strictly increasing".into()));
    }

    let mut table = Table::new(&["n", "trial", "mmd_sq", "mmd"]);
    let mut medians = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let size_seed = derive_seed(settings.seed(), i as u64);
        let values = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(size_seed, t as u64);
                let x = Sample::scalar(dist.sample(n, seed, 0))?;
                let y = Sample::scalar(dist.sample(n, seed, 1))?;
                Ok(mmd_biased_sq(&spec, &x, &y, &mut CostLedger::default())?.value)
            })
            .collect::<Result<Vec<f64>, qmelab::Error>>()?;
        for (t, &m) in values.iter().enumerate() {
            table.push(vec![n.to_string(), t.to_string(), real(m), real(m.sqrt())]);
        }
        let mut roots: Vec<f64> = values.iter().map(|m| m.sqrt()).collect();
        medians.push(MedianRow {
            n,
            median_mmd: median(&mut roots),
        });
    }
    let points: Vec<(f64, f64)> = medians.iter().map(|r| (r.n as f64, r.median_mmd)).collect();
    let fit = fit_power_law(&points)?;
    let result = ConvergenceResult {
        distribution: dist.to_string(),
        kernel: spec,
        trials,
        medians,
        fit,
    };
    Output::new(
        "convergence",
        &result,
        &Provenance::new(settings, false),
        settings,
        Some(table),
    )
}

#[derive(Serialize)]
struct TruncationRow {
    tol: f64,
    dim: usize,
    max_error: f64,
}

#[derive(Serialize)]
struct TruncationResult {
    sigma: f64,
    u_max: f64,
    grid_points: usize,
    rows: Vec<TruncationRow>,
    /// Errors never grow as the dimension grows.
    error_nonincreasing_in_dim: bool,
}

/// Largest deviation of feature-state overlaps from the Gaussian kernel over
/// a square grid of `|x| / σ <= u_max`, per truncation tolerance.
pub fn cmd_truncation_study(settings: &Settings) -> Result<Output, CliError> {
    let sigma = settings.sigma();
    let u_max = settings.u_max.expect("resolved");
    let grid_points = settings.grid_points.expect("resolved");
    let tols = settings.tols.clone().expect("resolved");
    if !(u_max >= 0.0 && u_max.is_finite()) {
        return Err(CliError::Input(format!(
            "u-max must be finite and nonnegative, got {u_max}"
        )));
    }
    if grid_points == 0 || tols.is_empty() {
        return Err(CliError::Input("grid-points and tols must be nonempty".into()));
    }
    KernelSpec::gaussian(sigma)?;
    let grid: Vec<f64> = if grid_points == 1 {
        vec![0.0]
    } else {
        (0..grid_points)
            .map(|i| sigma * u_max * (2.0 * i as f64 / (grid_points - 1) as f64 - 1.0))
            .collect()
    };

    let mut rows = Vec::with_capacity(tols.len());
    for &tol in &tols {
        TruncationPolicy::new(tol, u_max)?;
        let dim = settings.dim.unwrap_or_else(|| min_truncation_dim(u_max, tol));
        let states = grid
            .iter()
            .map(|&x| coherent_feature(x, sigma, dim, tol))
            .collect::<Result<Vec<_>, _>>()?;
        let mut max_error = 0.0_f64;
        for (a, &xa) in states.iter().zip(&grid) {
            for (b, &xb) in states.iter().zip(&grid) {
                let exact = (-(xa - xb).powi(2) / (2.0 * sigma * sigma)).exp();
                max_error = max_error.max((inner(a, b)?.re - exact).abs());
            }
        }
        rows.push(TruncationRow { tol, dim, max_error });
    }
    let mut by_dim: Vec<(usize, f64)> = rows.iter().map(|r| (r.dim, r.max_error)).collect();
    by_dim.sort_by_key(|r| r.0);
    let monotone = by_dim.windows(2).all(|w| w[1].1 <= w[0].1 || w[1].0 == w[0].0);

    let mut table = Table::new(&["tol", "dim", "max_error"]);
    for r in &rows {
        table.push(vec![real(r.tol), r.dim.to_string(), real(r.max_error)]);
    }
    let result = TruncationResult {
        sigma,
        u_max,
        grid_points,
        rows,
        error_nonincreasing_in_dim: monotone,
    };
    Output::new(
        "truncation-study",
        &result,
        &Provenance::new(settings, false),
        settings,
        Some(table),
    )
}

#[derive(Serialize)]
struct ShotNoiseRow {
    shots: u64,
    mean: f64,
    empirical_sd: f64,
    mean_stderr: f64,
}

#[derive(Serialize)]
struct ShotNoiseResult {
    overlap_sq_exact: f64,
    trials: usize,
    rows: Vec<ShotNoiseRow>,
    empirical_fit: PowerLawFit,
    reported_fit: PowerLawFit,
}

/// Spread of the swap-test estimate of `|⟨ν_X|ν_Y⟩|²` against shot count.
/// Without inputs, X = {0, 1} and Y = {0}.
pub fn cmd_shot_noise(settings: &Settings) -> Result<Output, CliError> {
    let (x, y) = if settings.inputs().is_empty() {
        (Sample::scalar(vec![0.0, 1.0])?, Sample::scalar(vec![0.0])?)
    } else {
        load_pair(settings)?
    };
    let cfg = pipeline(settings, &[&x, &y])?;
    let trials = settings.trials();
    if trials < 2 {
        return Err(CliError::Input(
            "shot-noise needs at least 2 trials per shot count".into(),
        ));
    }
    let grid = settings.shots_grid.clone().expect("resolved");
    check_grid("shots-grid", grid.len())?;
    if grid.contains(&0) {
        return Err(CliError::Input("shot counts must be positive".into()));
    }

    let mut ledger = CostLedger::default();
    let vx = qme_state(&x, cfg.sigma, &cfg.truncation, &mut ledger)?;
    let vy = qme_state(&y, cfg.sigma, &cfg.truncation, &mut ledger)?;
    let exact = inner(&vx, &vy)?.norm_sqr();

    let mut table = Table::new(&["shot_count", "trial", "value", "stderr"]);
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &shots) in grid.iter().enumerate() {
        let grid_seed = derive_seed(settings.seed(), i as u64);
        let ests = (0..trials)
            .map(|t| run_swap_shots(&vx, &vy, shots, derive_seed(grid_seed, t as u64), &mut ledger))
            .collect::<Result<Vec<_>, _>>()?;
        let n = trials as f64;
        let mean = ests.iter().map(|e| e.value).sum::<f64>() / n;
        let sd = (ests.iter().map(|e| (e.value - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mean_stderr = ests.iter().map(|e| e.stderr).sum::<f64>() / n;
        for (t, e) in ests.iter().enumerate() {
            table.push(vec![shots.to_string(), t.to_string(), real(e.value), real(e.stderr)]);
        }
        rows.push(ShotNoiseRow {
            shots,
            mean,
            empirical_sd: sd,
            mean_stderr,
        });
    }
    let fit =
        |f: fn(&ShotNoiseRow) -> f64| fit_power_law(&rows.iter().map(|r| (r.shots as f64, f(r))).collect::<Vec<_>>());
    let result = ShotNoiseResult {
        overlap_sq_exact: exact,
        trials,
        empirical_fit: fit(|r| r.empirical_sd)?,
        reported_fit: fit(|r| r.mean_stderr)?,
        rows,
    };
    Output::new(
        "shot-noise",
        &result,
        &Provenance::new(settings, true),
        settings,
        Some(table),
    )
}

/// Resource counters of the classical and quantum routes to `K(X, Y)`
/// across sizes.
pub fn cmd_scaling(settings: &Settings) -> Result<Output, CliError> {
    require_gaussian(settings)?;
    let sizes = settings.sizes();
    check_grid("sizes", sizes.len())?;
    let mut cfg =
        QmePipelineConfig::new(settings.sigma(), TruncationPolicy::new(settings.tol(), 1.0)?).sampled(settings.shots());
    cfg.reference = settings.reference();
    cfg.overlap_floor = settings.overlap_floor();
    if let qmelab::ReferenceRule::Point(x) = cfg.reference {
        cfg.truncation.x_abs_max_over_sigma = cfg.truncation.x_abs_max_over_sigma.max(x.abs() / cfg.sigma);
    }
    let report: ScalingReport = compare_paths(sizes, &cfg, settings.seed(), settings.wall_time())?;
    let mut table = Table::new(&["n", "path", "kernel_evals", "state_preps", "swap_shots", "wall_time_ns"]);
    for r in &report.rows {
        table.push(vec![
            r.n.to_string(),
            match r.path {
                qmelab::cost::CostPath::Classical => "classical".into(),
                qmelab::cost::CostPath::Quantum => "quantum".into(),
            },
            r.ledger.kernel_evals.to_string(),
            r.ledger.state_preps.to_string(),
            r.ledger.swap_shots.to_string(),
            r.ledger.wall_time_ns.to_string(),
        ]);
    }
    Output::new(
        "scaling",
        &report,
        &Provenance::new(settings, true),
        settings,
        Some(table),
    )
}
