//! Black-box tests of the `qmelab` binary: outputs, exit codes and
//! byte-for-byte reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qmelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmelab"))
        .args(args)
        .env_remove("QMELAB_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn gram_of_two_singletons() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n");
    let y = write(&dir, "y.csv", "1\n");
    let v = json(&qmelab(&["gram", "-i", s(&x), "-i", s(&y)]));
    let k = v["result"]["k_xy"].as_f64().unwrap();
    assert!((k - 0.6065306597126334).abs() < 1e-15);
    assert_eq!(v["provenance"]["seed"], 0);
    assert_eq!(v["provenance"]["config_hash"].as_str().unwrap().len(), 16);

    let same = json(&qmelab(&["gram", "-i", s(&x)]));
    assert_eq!(same["result"]["k_xy"].as_f64().unwrap(), 1.0);
}

#[test]
fn gram_full_block_and_csv_table() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "value\n0\n1\n");
    let out = dir.path().join("gram.csv");
    let v = json(&qmelab(&["gram", "-i", s(&x), "--full", "-o", s(&out), "--seed", "4"]));
    assert_eq!(v["result"]["gram"][0][1].as_f64().unwrap(), 0.6065306597126334);
    let table = std::fs::read_to_string(&out).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "i,j,k,seed,shots,config_hash");
    assert_eq!(lines.count(), 4);
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0.5\n1.5\nnot-a-number\n");
    let out = qmelab(&["gram", "-i", s(&x)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let ragged = write(&dir, "r.csv", "0,1\n2\n");
    let out = qmelab(&["gram", "-i", s(&ragged)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn missing_file_and_bad_flags_are_input_errors() {
    assert_eq!(qmelab(&["gram", "-i", "/nonexistent/x.csv"]).status.code(), Some(2));
    assert_eq!(qmelab(&["gram", "--sigma", "-1", "-i", "x"]).status.code(), Some(2));
    assert_eq!(qmelab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn mmd_classical_and_quantum_agree() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n");
    let y = write(&dir, "y.csv", "1\n");
    let classical = json(&qmelab(&["mmd", "-i", s(&x), "-i", s(&y)]));
    let c = classical["result"]["value"].as_f64().unwrap();
    assert!((c - 0.7869386805747332).abs() < 1e-15);
    let exact = json(&qmelab(&["mmd", "-i", s(&x), "-i", s(&y), "--path", "quantum-exact"]));
    assert!((exact["result"]["value"].as_f64().unwrap() - c).abs() < 1e-8);
    assert_eq!(exact["result"]["ledger"]["swap_shots"], 0);

    let same = json(&qmelab(&["mmd", "-i", s(&x), "-i", s(&x)]));
    assert_eq!(same["result"]["value"].as_f64().unwrap(), 0.0);

    let sampled = json(&qmelab(&[
        "mmd",
        "-i",
        s(&x),
        "-i",
        s(&y),
        "--path",
        "quantum-sampled",
        "--shots",
        "20000",
    ]));
    assert_eq!(sampled["provenance"]["shots"], 20000);
    assert_eq!(sampled["result"]["ledger"]["swap_shots"], 60000);
    let v = sampled["result"]["raw"].as_f64().unwrap();
    let se = sampled["result"]["stderr"].as_f64().unwrap();
    assert!(se > 0.0 && (v - c).abs() < 5.0 * se);
}

#[test]
fn quantum_paths_refuse_other_kernels() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n1\n");
    let out = qmelab(&["mmd", "-i", s(&x), "--kernel", "laplacian", "--path", "quantum-exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn far_reference_is_a_statistical_failure() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n0.5\n1\n");
    let y = write(&dir, "y.csv", "0.2\n");
    let out = qmelab(&[
        "norm",
        "-i",
        s(&x),
        "--path",
        "quantum-exact",
        "--reference",
        "point=30",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let out = qmelab(&[
        "mmd",
        "-i",
        s(&x),
        "-i",
        s(&y),
        "--path",
        "quantum-sampled",
        "--reference",
        "point=-30",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn norm_paths_agree() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.json", "[[0.0], [1.0]]");
    let c = json(&qmelab(&["norm", "-i", s(&x)]))["result"]["value"]
        .as_f64()
        .unwrap();
    assert!((c - 0.8962507070325338).abs() < 1e-15);
    for reference in ["mean", "median", "point=0.25"] {
        let e = json(&qmelab(&[
            "norm",
            "-i",
            s(&x),
            "--path",
            "quantum-exact",
            "--reference",
            reference,
        ]));
        assert!((e["result"]["value"].as_f64().unwrap() - c).abs() < 1e-8, "{reference}");
    }
}

#[test]
fn qme_inner_routes_agree() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n1\n");
    let y = write(&dir, "y.csv", "0\n");
    let classical = json(&qmelab(&["qme-inner", "-i", s(&x), "-i", s(&y), "--path", "classical"]));
    let exact = json(&qmelab(&["qme-inner", "-i", s(&x), "-i", s(&y), "--full"]));
    let o = exact["result"]["overlap"]["value"].as_f64().unwrap();
    assert!((classical["result"]["overlap"]["value"].as_f64().unwrap() - o).abs() < 1e-12);
    assert!((exact["result"]["overlap_sq"]["value"].as_f64().unwrap() - 0.8032653298563167).abs() < 1e-12);
    assert!(exact["result"]["states"]["x"]["amplitudes"].is_array());
}

#[test]
fn convergence_validates_and_reproduces() {
    assert_eq!(qmelab(&["convergence", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(qmelab(&["convergence", "--sizes", "8,16,32"]).status.code(), Some(2));
    assert_eq!(qmelab(&["convergence", "--sizes", "8,16,16,32"]).status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = [
        "convergence",
        "--sizes",
        "8,16,32,64",
        "--trials",
        "5",
        "--seed",
        "11",
        "--dist",
        "mixture:0.3,-1,0.5,1,0.5",
    ];
    let ja = qmelab(&[&args[..], &["-o", s(&a)]].concat());
    let jb = qmelab(&[&args[..], &["-o", s(&b)]].concat());
    let (ja, jb) = (json(&ja), json(&jb));
    assert_eq!(ja["result"], jb["result"]);
    assert_eq!(ja["provenance"], jb["provenance"]);
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 5);
    assert!(text.starts_with("n,trial,mmd_sq,mmd,seed,shots,config_hash\n8,0,"));
}

#[test]
fn seed_from_env_and_config_file() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n1\n");
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qmelab"));
        cmd.args(["qme-inner", "-i", s(&x), "--path", "quantum-sampled", "--shots", "1000"])
            .args(extra);
        match env {
            Some(v) => cmd.env("QMELAB_SEED", v),
            None => cmd.env_remove("QMELAB_SEED"),
        };
        json(&cmd.output().unwrap())
    };
    assert_eq!(run(&[], Some("42"))["provenance"]["seed"], 42);
    assert_eq!(run(&["--seed", "9"], Some("42"))["provenance"]["seed"], 9);
    let cfg = write(&dir, "cfg.json", r#"{"seed": 5, "shots": 2000}"#);
    let from_file = run(&["--config", s(&cfg)], Some("42"));
    assert_eq!(from_file["provenance"]["seed"], 5);
    // The explicit flag beats the file.
    assert_eq!(from_file["provenance"]["shots"], 1000);

    let unknown = write(&dir, "bad.json", r#"{"seeed": 5}"#);
    let out = qmelab(&["gram", "-i", s(&x), "--config", s(&unknown)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stored_config_reproduces_output() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n1\n2\n");
    let y = write(&dir, "y.csv", "0.5\n");
    let first = qmelab(&[
        "mmd",
        "-i",
        s(&x),
        "-i",
        s(&y),
        "--path",
        "quantum-sampled",
        "--shots",
        "5000",
        "--seed",
        "3",
    ]);
    let record = json(&first);
    let cfg = write(&dir, "stored.json", &record["config"].to_string());
    let second = qmelab(&["mmd", "--config", s(&cfg)]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn truncation_study_contract() {
    let v = json(&qmelab(&["truncation-study", "--tols", "1e-4,1e-8,1e-12"]));
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows[2]["dim"], 38);
    assert!(rows[2]["max_error"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["result"]["error_nonincreasing_in_dim"], true);

    let zero = json(&qmelab(&["truncation-study", "--u-max", "0", "--tols", "1e-12"]));
    assert_eq!(zero["result"]["rows"][0]["dim"], 1);
    assert_eq!(zero["result"]["rows"][0]["max_error"].as_f64().unwrap(), 0.0);

    let out = qmelab(&["truncation-study", "--tols", "1e-12", "--dim", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("below the policy minimum"), "{}", stderr(&out));
}

#[test]
fn shot_noise_slopes() {
    let v = json(&qmelab(&[
        "shot-noise",
        "--shots-grid",
        "100,1000,10000,100000",
        "--trials",
        "30",
        "--seed",
        "2",
    ]));
    for fit in ["empirical_fit", "reported_fit"] {
        let slope = v["result"][fit]["exponent"].as_f64().unwrap();
        assert!((slope + 0.5).abs() < 0.1, "{fit}: {slope}");
    }
    assert_eq!(qmelab(&["shot-noise", "--trials", "1"]).status.code(), Some(2));
}

#[test]
fn scaling_report_and_refusals() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let first = qmelab(&["scaling", "--seed", "8", "-o", s(&a)]);
    let v = json(&first);
    assert_eq!(v["result"]["classical_is_quadratic"], true);
    assert_eq!(v["result"]["quantum_kernel_is_linear"], true);
    assert_eq!(v["result"]["quantum_shots_constant"], true);
    let table = std::fs::read_to_string(&a).unwrap();
    assert!(table.starts_with("n,path,kernel_evals,state_preps,swap_shots,wall_time_ns,"));
    assert_eq!(table.lines().count(), 1 + 2 * 8);

    let second = qmelab(&["scaling", "--seed", "8", "-o", s(&a)]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read_to_string(&a).unwrap(), table);

    let out = qmelab(&["scaling", "--sizes", "8,16,32"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least 4"));
}

#[test]
fn json_numbers_carry_seventeen_digits() {
    let dir = TempDir::new().unwrap();
    let x = write(&dir, "x.csv", "0\n");
    let y = write(&dir, "y.csv", "1\n");
    let out = qmelab(&["gram", "-i", s(&x), "-i", s(&y)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"k_xy\": 6.0653065971263342e-1"), "{text}");
}
