//! End-to-end tests of the qpencil binary: exit codes, output schemas,
//! byte-level determinism modulo the timestamp header.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qpencil")
}

/// Every test gets its own directory: the harness runs tests concurrently,
/// and a shared pencil file could be re-written while another test's child
/// process reads it.
fn tmp_dir() -> PathBuf {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let id = NEXT.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!("qpencil-cli-test-{}-{id}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_free_pencil(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("free.json");
    std::fs::write(
        &path,
        r#"{
  "m": 1,
  "Q1": {"type": "poly", "coeffs": []},
  "Q0": {"type": "poly", "coeffs": []},
  "h0": [[[0,0]]],
  "h1": [[[0,0]]],
  "H0": [[[0,0]]],
  "H1": [[[0,0]]]
}"#,
    )
    .unwrap();
    path
}

fn write_regge_pencil(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("regge.json");
    std::fs::write(
        &path,
        r#"{
  "m": 1,
  "Q1": {"type": "poly", "coeffs": []},
  "Q0": {"type": "poly", "coeffs": []},
  "h0": [[[0,0]]],
  "h1": [[[1,0]]],
  "H0": [[[0,0]]],
  "H1": [[[0,0]]]
}"#,
    )
    .unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Strips the timestamp line so byte comparisons see only content.
fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("generated_at"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn validate_exit_codes() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let ok = run(&["validate", "--pencil", free.to_str().unwrap()]);
    assert!(ok.status.success());

    let regge = write_regge_pencil(&dir);
    let bad = run(&["validate", "--pencil", regge.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout_str(&bad).contains("det(I-h1)"));
}

#[test]
fn missing_pencil_is_usage_error() {
    let out = run(&["validate", "--pencil", "/nonexistent/nope.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error"), "stderr: {err}");
}

#[test]
fn weyl_free_neumann_closed_form() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let out = run(&[
        "weyl",
        "--pencil",
        free.to_str().unwrap(),
        "--rho-list",
        "0.25",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let row = &doc["data"][0];
    assert_eq!(row["rho_re"], 0.25);
    let m = row["m_psi_11_re"].as_f64().unwrap();
    assert!((m - 4.0).abs() < 1e-8, "M = {m}");
    assert!(row["discrepancy"].as_f64().unwrap() < 1e-9);
}

#[test]
fn weyl_at_eigenvalue_is_numerical_failure() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let out = run(&[
        "weyl",
        "--pencil",
        free.to_str().unwrap(),
        "--rho-list",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exit_code"), "stderr: {err}");
}

#[test]
fn spectrum_free_neumann() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let out = run(&[
        "spectrum",
        "--pencil",
        free.to_str().unwrap(),
        "--region",
        "0.5,4.5,-1,1",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let data = doc["data"].as_array().unwrap();
    assert_eq!(data.len(), 4);
    for (i, row) in data.iter().enumerate() {
        let expect = (i + 1) as f64;
        assert!((row["rho_re"].as_f64().unwrap() - expect).abs() < 1e-8);
        assert_eq!(row["multiplicity"], 1);
    }
}

#[test]
fn outputs_are_deterministic_modulo_timestamp() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let args = [
        "weyl",
        "--pencil",
        free.to_str().unwrap(),
        "--rho-list",
        "0.25,1.7+0.3i",
    ];
    let a = strip_timestamp(&stdout_str(&run(&args)));
    let b = strip_timestamp(&stdout_str(&run(&args)));
    assert_eq!(a, b);
    assert!(a.contains("config_hash="));
}

#[test]
fn parallel_jobs_keep_output_order() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let rho_list = "0.25,0.4,0.6,1.3+0.2i,2.6+0.1i,3.4-0.2i";
    let serial = run(&[
        "weyl",
        "--pencil",
        free.to_str().unwrap(),
        "--rho-list",
        rho_list,
        "--jobs",
        "1",
    ]);
    let parallel = run(&[
        "weyl",
        "--pencil",
        free.to_str().unwrap(),
        "--rho-list",
        rho_list,
        "--jobs",
        "4",
    ]);
    assert!(serial.status.success() && parallel.status.success());
    // --jobs appears in the hashed argument list, so compare data rows only
    let body = |out: &Output| {
        stdout_str(out)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&serial), body(&parallel));
}

#[test]
fn gen_is_deterministic_and_admissible() {
    let dir = tmp_dir();
    let out1 = dir.join("g1.json");
    let out2 = dir.join("g2.json");
    for out in [&out1, &out2] {
        let st = run(&[
            "gen",
            "--seed",
            "7",
            "--m",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(st.status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same seed must produce identical files");

    let check = run(&["validate", "--pencil", out1.to_str().unwrap()]);
    assert!(check.status.success());
}

#[test]
fn solve_rows_echo_inputs() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let out = run(&[
        "solve",
        "--pencil",
        free.to_str().unwrap(),
        "--rho-list",
        "2",
        "--kinds",
        "c",
        "--grid-points",
        "3",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let data = doc["data"].as_array().unwrap();
    assert_eq!(data.len(), 3);
    assert_eq!(data[0]["rho_re"], 2.0);
    assert_eq!(data[0]["x"], 0.0);
    // C(0) = 1 and C(pi) = cos(2 pi) = 1
    assert!((data[0]["y_11_re"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((data[2]["y_11_re"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn asympt_exact_for_free_pencil() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let out = run(&[
        "asympt",
        "--pencil",
        free.to_str().unwrap(),
        "--kind",
        "c",
        "--x",
        "1.0",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(doc["data"][0]["exact_to_precision"], true);
}

#[test]
fn uniq_self_pair_report() {
    let dir = tmp_dir();
    let free = write_free_pencil(&dir);
    let out = run(&[
        "uniq",
        "--pencil",
        free.to_str().unwrap(),
        "--pencil2",
        free.to_str().unwrap(),
        "--rho-list",
        "0.7+0.3i",
        "--x-list",
        "1.0,2.0",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let data = doc["data"].as_array().unwrap();
    let lambda = data
        .iter()
        .find(|r| r["check"] == "max_lambda_norm")
        .unwrap();
    assert!(lambda["value"].as_f64().unwrap() < 1e-9);
    let dist = data
        .iter()
        .find(|r| r["check"] == "distinguishable")
        .unwrap();
    assert_eq!(dist["value"], false);
}
