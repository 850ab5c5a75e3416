//! End-to-end tests of the `trace3` binary: JSON shape, exit codes, cache
//! behaviour and reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trace3"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_json(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("trace3-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn trace_niebur_closed_paper_value() {
    let doc = run_json(&["trace-niebur", "--D", "-4", "--mu", "0,1", "--m", "1", "--method", "closed"]);
    assert_eq!(doc["result"]["value"], "196884");
    assert_eq!(doc["result"]["method"], "closed");
    assert_eq!(doc["meta"]["seconds"], serde_json::Value::Null);
}

#[test]
fn trace_one_is_exact_zero() {
    let doc = run_json(&["trace-one", "--D", "-4", "--m", "3"]);
    assert_eq!(doc["result"]["value"], "0");
}

#[test]
fn coeff_values_as_strings() {
    let doc = run_json(&["coeff", "--n", "1", "--m", "1"]);
    assert_eq!(doc["result"]["value"], "196884");
    let doc = run_json(&["coeff", "--n", "1", "--m", "-1"]);
    assert_eq!(doc["result"]["value"], "1");
    let doc = run_json(&["coeff", "--n", "2", "--m", "0"]);
    assert_eq!(doc["result"]["value"], "0");
}

#[test]
fn jn_expansion_shape() {
    let doc = run_json(&["jn", "--n", "2", "--prec", "3"]);
    assert_eq!(doc["result"]["valuation"], -2);
    let coeffs = doc["result"]["coefficients"].as_array().unwrap();
    assert_eq!(coeffs[0]["exponent"], -2);
    assert_eq!(coeffs[0]["value"], "1");
    // c_2(1) = 42987520 sits at exponent 1
    assert_eq!(coeffs[3]["exponent"], 1);
    assert_eq!(coeffs[3]["value"], "42987520");
}

#[test]
fn orbit_listing_matches_fixture() {
    let doc = run_json(&["orbits", "--D", "-4", "--m", "1"]);
    assert_eq!(doc["result"]["classCount"], 3);
    let classes = doc["result"]["classes"].as_array().unwrap();
    let stabs: Vec<u64> = classes.iter().map(|c| c["stabilizerOrder"].as_u64().unwrap()).collect();
    let chis: Vec<i64> = classes.iter().map(|c| c["chi"].as_i64().unwrap()).collect();
    assert_eq!(stabs, vec![4, 4, 8]);
    assert_eq!(chis, vec![1, -1, 0]);
}

#[test]
fn verify_lemma31_reports_residual() {
    let doc = run_json(&["verify", "lemma31", "--D", "-15", "--cmax", "40"]);
    let residual = doc["result"]["maxResidual"].as_f64().unwrap();
    assert!(residual < 1e-9, "residual {residual}");
    assert_eq!(doc["result"]["pass"], true);
}

#[test]
fn exit_code_validation_error() {
    let out = run(&["trace-niebur", "--D", "-5", "--mu", "0,1", "--m", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("error JSON on stderr");
    assert_eq!(err["error"]["kind"], "validation");
}

#[test]
fn exit_code_range_error() {
    // point below the convergence region r > sqrt(m |D|)
    let out = run(&["eval-L", "--D", "-4", "--m", "1", "--point", "0,0,1.0"]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "range");
}

#[test]
fn exit_code_unsupported_discriminant() {
    let out = run(&["orbits", "--D", "-15", "--m", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "unsupported-discriminant");
}

#[test]
fn deterministic_across_runs_and_threads() {
    let args = ["trace-niebur", "--D", "-4", "--mu", "0,1", "--m", "2", "--method", "all", "--cmax", "300"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "repeated runs must be byte-identical");

    let mut with_threads = args.to_vec();
    with_threads.extend_from_slice(&["--threads", "8"]);
    let threaded = run(&with_threads);
    assert!(threaded.status.success());
    // the thread count is not part of the input echo, so the whole
    // document must agree
    assert_eq!(first.stdout, threaded.stdout, "thread count must not change results");
}

#[test]
fn cache_env_and_flag() {
    let dir = tmp_dir("env");
    let out = bin()
        .env("TRACE3_CACHE", &dir)
        .args(["coeff", "--n", "3", "--m", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("jn-00003.json").exists(), "env cache dir is used");

    // explicit flag wins over the environment
    let flag_dir = tmp_dir("flag");
    let out = bin()
        .env("TRACE3_CACHE", &dir)
        .args(["--cache-dir"])
        .arg(&flag_dir)
        .args(["coeff", "--n", "4", "--m", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(flag_dir.join("jn-00004.json").exists());
    assert!(!dir.join("jn-00004.json").exists());

    // second run hits the cache and produces the same value
    let doc = run_json(&["--cache-dir", flag_dir.to_str().unwrap(), "coeff", "--n", "4", "--m", "2"]);
    assert_eq!(doc["result"]["value"], "1605963589611520");
    let _ = std::fs::remove_dir_all(&dir);
    let _ = std::fs::remove_dir_all(&flag_dir);
}

#[test]
fn cache_stats_and_clear() {
    let dir = tmp_dir("stats");
    let dirs = dir.to_str().unwrap();
    let _ = run_json(&["--cache-dir", dirs, "coeff", "--n", "2", "--m", "1"]);
    let doc = run_json(&["--cache-dir", dirs, "cache", "stats"]);
    assert_eq!(doc["result"]["diskFiles"], 1);
    let doc = run_json(&["--cache-dir", dirs, "cache", "clear"]);
    assert_eq!(doc["result"]["removedFiles"], 1);
    let doc = run_json(&["--cache-dir", dirs, "cache", "stats"]);
    assert_eq!(doc["result"]["diskFiles"], 0);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn output_file_and_timings() {
    let dir = tmp_dir("out");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("result.json");
    let out = bin()
        .args(["--output", path.to_str().unwrap(), "--timings", "coeff", "--n", "1", "--m", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(doc["result"]["value"], "21493760");
    assert!(doc["meta"]["seconds"].as_f64().unwrap() >= 0.0);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn eval_j_fixture_scale() {
    // J_{1/2}(2j) is ~786286 already at a small truncation
    let doc = run_json(&["eval-J", "--D", "-4", "--mu", "0,1", "--point", "0,0,2", "--cmax", "60"]);
    let v = doc["result"]["value"].as_f64().unwrap();
    assert!((v - 786286.36).abs() / 786286.36 < 0.01, "value {v}");
}

#[test]
fn trace_eisenstein_both_routes() {
    let doc = run_json(&["trace-eisenstein", "--D", "-4", "--m", "1", "--s", "3", "--cmax", "800"]);
    let closed = doc["result"]["closed"].as_f64().unwrap();
    let series = doc["result"]["series"]["value"].as_f64().unwrap();
    assert!(((closed - series) / closed).abs() < 1e-2, "{closed} vs {series}");
    // s = 1 limit via the class number formula route
    let doc = run_json(&["trace-eisenstein", "--D", "-4", "--m", "1", "--s", "1", "--method", "closed"]);
    let v = doc["result"]["closed"].as_f64().unwrap();
    assert!((v - 6.0 / std::f64::consts::PI).abs() < 1e-12);
}
