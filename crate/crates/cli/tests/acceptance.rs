//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use qmelab::cost::CostPath;
use qmelab::swap::count_zero_outcomes;
use qmelab::{
    coherent_feature, compare_paths, embedding_norm, estimate_mmd_sq, estimate_norm_via_reference, fit_power_law,
    inner, mean_inner, min_truncation_dim, mmd_biased_sq, qme_state, run_swap_shots, scaling_fit, swap_probabilities,
    CostLedger, Distribution, KernelSpec, PureState, QmePipelineConfig, ReferenceRule, Sample, TruncationPolicy,
};
use serde_json::Value;

const SIGMA: f64 = 1.0;
const SHOTS: u64 = 1_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gaussian() -> KernelSpec {
    KernelSpec::gaussian(SIGMA).unwrap()
}

fn scalar(v: Vec<f64>) -> Sample {
    Sample::scalar(v).unwrap()
}

/// 100 scalar sample pairs with sizes in 1..=64 drawn from a rotating set
/// of distributions.
fn random_pairs() -> Vec<(Sample, Sample)> {
    let dists = [
        Distribution::Gaussian { mean: 0.0, std: 1.0 },
        Distribution::Gaussian { mean: 0.7, std: 0.5 },
        Distribution::Uniform { low: -1.5, high: 1.5 },
        Distribution::Mixture {
            weight: 0.4,
            mean1: -1.0,
            std1: 0.4,
            mean2: 1.0,
            std2: 0.6,
        },
    ];
    (0..100u64)
        .map(|i| {
            let seed = qmelab::rng::derive_seed(0xACCE, i);
            let nx = 1 + (seed % 64) as usize;
            let ny = 1 + ((seed >> 8) % 64) as usize;
            let dx = dists[(i % 4) as usize];
            let dy = dists[((i / 4) % 4) as usize];
            (scalar(dx.sample(nx, seed, 0)), scalar(dy.sample(ny, seed, 1)))
        })
        .collect()
}

fn exact_cfg(samples: &[&Sample]) -> QmePipelineConfig {
    QmePipelineConfig::covering(SIGMA, samples, ReferenceRule::SampleMean)
        .unwrap()
        .exact()
}

fn criterion_1() -> Outcome {
    let d = min_truncation_dim(3.0, 1e-12);
    let grid: Vec<f64> = (0..61).map(|i| -3.0 * SIGMA + 0.1 * SIGMA * i as f64).collect();
    let states: Vec<PureState> = grid
        .iter()
        .map(|&x| coherent_feature(x, SIGMA, d, 1e-12).unwrap())
        .collect();
    let mut worst = 0.0_f64;
    for (a, xa) in states.iter().zip(&grid) {
        for (b, xb) in states.iter().zip(&grid) {
            let k = (-(xa - xb).powi(2) / (2.0 * SIGMA * SIGMA)).exp();
            worst = worst.max((inner(a, b).unwrap().re - k).abs());
        }
    }
    outcome(worst <= 1e-8, format!("d = {d}, max error {worst:.3e} (<= 1e-8)"))
}

fn criterion_2(pairs: &[(Sample, Sample)]) -> Outcome {
    let spec = gaussian();
    let mut worst = 0.0_f64;
    for (x, y) in pairs {
        let cfg = exact_cfg(&[x, y]);
        let mut l = CostLedger::default();
        let vx = qme_state(x, SIGMA, &cfg.truncation, &mut l).unwrap();
        let vy = qme_state(y, SIGMA, &cfg.truncation, &mut l).unwrap();
        let nx = embedding_norm(&spec, x, &mut l).unwrap().value();
        let ny = embedding_norm(&spec, y, &mut l).unwrap().value();
        let k = mean_inner(&spec, x, y, &mut l).unwrap();
        worst = worst.max((nx * ny * inner(&vx, &vy).unwrap().re - k).abs());
    }
    outcome(
        worst <= 1e-8,
        format!(
            "{} pairs, max |N_X N_Y <v_X|v_Y> - K| {worst:.3e} (<= 1e-8)",
            pairs.len()
        ),
    )
}

fn criterion_3(pairs: &[(Sample, Sample)]) -> Outcome {
    let spec = gaussian();
    let mut worst_k = 0.0_f64;
    let mut worst_mmd = 0.0_f64;
    for (i, (x, y)) in pairs.iter().enumerate() {
        let cfg = exact_cfg(&[x, y]);
        let mut l = CostLedger::default();
        let k = mean_inner(&spec, x, y, &mut l).unwrap();
        let mmd = mmd_biased_sq(&spec, x, y, &mut l).unwrap().raw;
        let q = estimate_mmd_sq(x, y, &cfg, i as u64).unwrap();
        worst_k = worst_k.max((q.k.value - k).abs());
        worst_mmd = worst_mmd.max((q.estimate.value - mmd).abs());
    }
    let exact_ok = worst_k <= 1e-8 && worst_mmd <= 1e-8;

    let trials = 200;
    let mut k_hits = 0;
    let mut mmd_hits = 0;
    for t in 0..trials {
        let (x, y) = &pairs[t % pairs.len()];
        let cfg = exact_cfg(&[x, y]).sampled(SHOTS);
        let mut l = CostLedger::default();
        let k = mean_inner(&spec, x, y, &mut l).unwrap();
        let mmd = mmd_biased_sq(&spec, x, y, &mut l).unwrap().raw;
        let q = estimate_mmd_sq(x, y, &cfg, 1000 + t as u64).unwrap();
        k_hits += usize::from((q.k.value - k).abs() <= 3.0 * q.k.stderr);
        mmd_hits += usize::from((q.estimate.value - mmd).abs() <= 3.0 * q.estimate.stderr);
    }
    let sampled_ok = k_hits * 100 >= 95 * trials && mmd_hits * 100 >= 95 * trials;
    outcome(
        exact_ok && sampled_ok,
        format!(
            "exact max err K {worst_k:.3e}, MMD {worst_mmd:.3e} (<= 1e-8); sampled within 3 se: K {k_hits}/{trials}, MMD {mmd_hits}/{trials} (>= 95%)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let policy = TruncationPolicy::covering(3.0).unwrap();
    let mut worst_ratio = 0.0_f64;
    for i in 0..20u64 {
        let seed = qmelab::rng::derive_seed(0x5A9, i);
        let d = Distribution::Uniform { low: -2.0, high: 2.0 };
        let x = scalar(d.sample(1 + (i as usize % 7), seed, 0));
        let y = scalar(d.sample(1 + (i as usize % 5), seed, 1));
        let mut l = CostLedger::default();
        let a = qme_state(&x, SIGMA, &policy, &mut l).unwrap();
        let b = qme_state(&y, SIGMA, &policy, &mut l).unwrap();
        let (p0, _) = swap_probabilities(&a, &b).unwrap();
        let freq = count_zero_outcomes(p0, SHOTS, seed) as f64 / SHOTS as f64;
        let bound = 4.0 * (p0 * (1.0 - p0) / SHOTS as f64).sqrt();
        let ratio = if bound > 0.0 {
            (freq - p0).abs() / bound
        } else if freq == p0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_ratio = worst_ratio.max(ratio);
    }
    let freq_ok = worst_ratio <= 1.0;

    let mut l = CostLedger::default();
    let a = qme_state(&scalar(vec![0.0, 1.0]), SIGMA, &policy, &mut l).unwrap();
    let b = qme_state(&scalar(vec![0.0]), SIGMA, &policy, &mut l).unwrap();
    let mut empirical = Vec::new();
    let mut reported = Vec::new();
    for shots in [100u64, 1_000, 10_000, 100_000, 1_000_000] {
        let ests: Vec<_> = (0..40)
            .map(|s| run_swap_shots(&a, &b, shots, 77 + s, &mut l).unwrap())
            .collect();
        let n = ests.len() as f64;
        let mean = ests.iter().map(|e| e.value).sum::<f64>() / n;
        let sd = (ests.iter().map(|e| (e.value - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        empirical.push((shots as f64, sd));
        reported.push((shots as f64, ests.iter().map(|e| e.stderr).sum::<f64>() / n));
    }
    let se = fit_power_law(&empirical).unwrap().exponent;
    let sr = fit_power_law(&reported).unwrap().exponent;
    let slope_ok = (se + 0.5).abs() <= 0.1 && (sr + 0.5).abs() <= 0.1;
    outcome(
        freq_ok && slope_ok,
        format!(
            "20 pairs, worst |freq - p0| / 4 sd = {worst_ratio:.3} (<= 1); slopes empirical {se:.4}, reported {sr:.4} (-0.5 +/- 0.1)"
        ),
    )
}

fn criterion_5(pairs: &[(Sample, Sample)]) -> Outcome {
    let spec = gaussian();
    let mut worst = 0.0_f64;
    for (i, (x, _)) in pairs.iter().enumerate() {
        let n = embedding_norm(&spec, x, &mut CostLedger::default()).unwrap().value();
        let est = estimate_norm_via_reference(x, &exact_cfg(&[x]), i as u64).unwrap();
        worst = worst.max((est.estimate.value - n).abs());
    }
    let exact_ok = worst <= 1e-8;

    let trials = 200;
    let mut hits = 0;
    for t in 0..trials {
        let (x, _) = &pairs[t % pairs.len()];
        let n = embedding_norm(&spec, x, &mut CostLedger::default()).unwrap().value();
        let est = estimate_norm_via_reference(x, &exact_cfg(&[x]).sampled(SHOTS), 5000 + t as u64).unwrap();
        hits += usize::from((est.estimate.value - n).abs() <= 3.0 * est.estimate.stderr);
    }
    let sampled_ok = hits * 100 >= 95 * trials;

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    std::fs::write(&input, "-0.5\n0.0\n0.25\n1.0\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_qmelab"))
        .args(["norm", "--path", "quantum-sampled", "--reference", "point=40", "-i"])
        .arg(&input)
        .output()
        .unwrap();
    let code = status.status.code();
    let cli_ok = code == Some(3);
    outcome(
        exact_ok && sampled_ok && cli_ok,
        format!("exact max err {worst:.3e} (<= 1e-8); sampled within 3 se {hits}/{trials} (>= 95%); far reference exit code {code:?} (3)"),
    )
}

fn criterion_6() -> Outcome {
    let sizes: Vec<usize> = (3..=10).map(|k| 1usize << k).collect();
    let cfg = QmePipelineConfig::new(SIGMA, TruncationPolicy::covering(1.0).unwrap());
    let report = compare_paths(&sizes, &cfg, 6, false).unwrap();
    let series = |path: CostPath, f: fn(&CostLedger) -> u64| {
        let pts: Vec<(u64, u64)> = report.rows_for(path).map(|r| (r.n as u64, f(&r.ledger))).collect();
        pts
    };
    let classical = scaling_fit(&series(CostPath::Classical, |l| l.kernel_evals))
        .unwrap()
        .exponent;
    let preps = scaling_fit(&series(CostPath::Quantum, |l| l.state_preps))
        .unwrap()
        .exponent;
    let shots = scaling_fit(&series(CostPath::Quantum, |l| l.swap_shots))
        .unwrap()
        .exponent;
    let rerun = compare_paths(&sizes, &cfg, 6, false).unwrap();
    let deterministic = serde_json::to_string(&report).unwrap() == serde_json::to_string(&rerun).unwrap();
    outcome(
        (classical - 2.0).abs() <= 0.05 && (preps - 1.0).abs() <= 0.05 && shots.abs() <= 0.05 && deterministic,
        format!(
            "classical kernel_evals {classical:.4} (2 +/- 0.05), quantum state_preps {preps:.4} (1 +/- 0.05), swap_shots {shots:.4} (0 +/- 0.05), rerun identical {deterministic}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_qmelab"))
        .args([
            "convergence",
            "--seed",
            "7",
            "--trials",
            "100",
            "--dist",
            "gaussian:0,1",
        ])
        .args(["--sizes", "32,64,128,256,512,1024,2048,4096"])
        .output()
        .unwrap();
    if !out.status.success() {
        return outcome(
            false,
            format!("convergence failed: {}", String::from_utf8_lossy(&out.stderr)),
        );
    }
    let record: Value = serde_json::from_slice(&out.stdout).unwrap();
    let slope = record["result"]["fit"]["exponent"].as_f64().unwrap();
    outcome(
        (-0.65..=-0.35).contains(&slope),
        format!("median MMD slope {slope:.4} over n = 2^5..2^12, 100 trials ([-0.65, -0.35])"),
    )
}

fn criterion_8() -> Outcome {
    let spec = gaussian();
    let policy = TruncationPolicy::covering(6.0).unwrap();
    let mut distinct = 0;
    let mut max_inner = f64::NEG_INFINITY;
    let mut i = 0u64;
    while distinct < 20 {
        let seed = qmelab::rng::derive_seed(0x1AC, i);
        i += 1;
        let n = 1 + (seed % 16) as usize;
        let x = scalar(Distribution::Uniform { low: -2.0, high: 2.0 }.sample(n, seed, 0));
        let y = scalar(Distribution::Uniform { low: -2.0, high: 2.0 }.sample(n, seed, 1));
        if mmd_biased_sq(&spec, &x, &y, &mut CostLedger::default()).unwrap().raw <= 1e-6 {
            continue;
        }
        distinct += 1;
        let mut l = CostLedger::default();
        let vx = qme_state(&x, SIGMA, &policy, &mut l).unwrap();
        let vy = qme_state(&y, SIGMA, &policy, &mut l).unwrap();
        max_inner = max_inner.max(inner(&vx, &vy).unwrap().re);
    }
    let distinct_ok = max_inner < 1.0 - 1e-9;

    let mut worst = 0.0_f64;
    for k in 0..20u64 {
        let seed = qmelab::rng::derive_seed(0xD0B, k);
        let n = 2 + (seed % 20) as usize;
        let base = Distribution::Gaussian { mean: 0.0, std: 1.2 }.sample(n, seed, 0);
        let variant: Vec<f64> = if k % 2 == 0 {
            let mut v = base.clone();
            v.reverse();
            v.rotate_left((seed >> 8) as usize % n);
            v
        } else {
            let copies = 2 + (k as usize / 2) % 3;
            base.iter().flat_map(|&x| std::iter::repeat_n(x, copies)).collect()
        };
        let a = qme_state(&scalar(base), SIGMA, &policy, &mut CostLedger::default()).unwrap();
        let b = qme_state(&scalar(variant), SIGMA, &policy, &mut CostLedger::default()).unwrap();
        for (p, q) in a.amplitudes().iter().zip(b.amplitudes()) {
            worst = worst.max((p - q).norm());
        }
    }
    let same_ok = worst <= 1e-12;
    outcome(
        distinct_ok && same_ok,
        format!("20 distinct pairs, max <v_X|v_Y> = {max_inner:.12} (< 1 - 1e-9); 20 permutations/duplications, max amplitude diff {worst:.3e} (<= 1e-12)"),
    )
}

fn main() -> ExitCode {
    let pairs = random_pairs();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("1 kernel reproduction", Box::new(criterion_1)),
        ("2 norm-overlap identity", Box::new(|| criterion_2(&pairs))),
        ("3 quantum path matches kernel path", Box::new(|| criterion_3(&pairs))),
        ("4 swap-test statistics", Box::new(criterion_4)),
        ("5 reference-state normalization", Box::new(|| criterion_5(&pairs))),
        ("6 resource scaling", Box::new(criterion_6)),
        ("7 MMD convergence rate", Box::new(criterion_7)),
        ("8 embedding injectivity", Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "acceptance {name}: {verdict} [{:.1}s] {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
