use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclecap"))
        .args(args)
        .env_remove("CYCLECAP_MAX_N")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, args: &[&str]) -> String {
    let got = stdout(args);
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(got, want, "output of {args:?} drifted from {name}");
    got
}

fn parse(s: &str) -> Value {
    assert_eq!(s.lines().count(), 1, "JSON output is one line");
    serde_json::from_str(s).unwrap()
}

#[test]
fn count_small() {
    let v = parse(&check_golden(
        "count_4_2.json",
        &["count", "--n", "4", "--alpha", "2", "--format", "json"],
    ));
    assert_eq!(v, serde_json::json!({"n": 4, "alpha": 2, "count": "10"}));
    let csv = check_golden(
        "count_4_2.csv",
        &["count", "--n", "4", "--alpha", "2", "--format", "csv"],
    );
    assert_eq!(csv, "n,alpha,count\n4,2,10\n");
}

#[test]
fn count_beyond_u64_is_a_string() {
    let v = parse(&stdout(&["count", "--n", "30", "--alpha", "30"]));
    assert_eq!(v["count"], "265252859812191058636308480000000");
}

#[test]
fn distribution_small() {
    let v = parse(&check_golden(
        "dist_4_2.json",
        &["dist", "--n", "4", "--alpha", "2"],
    ));
    for (k, p) in [("2", 0.3), ("3", 0.6), ("4", 0.1)] {
        assert!((v["probs"][k].as_f64().unwrap() - p).abs() < 1e-12);
    }
    let csv = check_golden(
        "dist_4_2.csv",
        &["dist", "--n", "4", "--alpha", "2", "--format", "csv"],
    );
    assert!(csv.starts_with("cycles,probability\n"));
}

#[test]
fn moments_small() {
    let v = parse(&check_golden(
        "moments_4_2.json",
        &["moments", "--n", "4", "--alpha", "2"],
    ));
    assert!((v["m"].as_f64().unwrap() - 2.7808).abs() < 1e-3);
    assert!((v["v"].as_f64().unwrap() - 0.2957).abs() < 1e-3);
    assert_eq!(v.as_object().unwrap().len(), 2);
}

#[test]
fn saddle_small() {
    let v = parse(&check_golden(
        "saddle_4_2.json",
        &["saddle", "--n", "4", "--alpha", "2"],
    ));
    let x = v["x"].as_f64().unwrap();
    assert!((x - (17f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
    assert!((v["x_prime"].as_f64().unwrap() + 0.9701).abs() < 1e-3);
}

#[test]
fn expansions() {
    let v = parse(&check_golden(
        "expand_1e6_1e3.json",
        &["expand", "--n", "1000000", "--alpha", "1000"],
    ));
    assert_eq!(v["m"]["truncation_reason"], "optimal_stop");
    assert_eq!(v["v"]["first_index"], 2);
    let terms = v["m"]["terms"].as_array().unwrap();
    assert_eq!(terms[0].as_f64().unwrap(), 1000.0);
}

#[test]
fn growth_report() {
    let v = parse(&check_golden(
        "check_growth_1e6_1e3.json",
        &["check-growth", "--n", "1000000", "--alpha", "1000"],
    ));
    assert_eq!(v["hypothesis_satisfied"], false);
    assert_eq!(v["alpha_at_least_four"], true);
}

#[test]
fn approximation_report() {
    let v = parse(&check_golden(
        "check_approx_2000_50.json",
        &["check-approx", "--n", "2000", "--alpha", "50"],
    ));
    assert!(v["relative_error"].as_f64().unwrap() < 1e-5);
}

#[test]
fn verify_clt_exact() {
    let v = parse(&check_golden(
        "verify_clt_exact_1000.json",
        &["verify-clt", "--n", "1000", "--alpha", "n^0.5", "--exact"],
    ));
    assert_eq!(v["alpha"], 32);
    assert_eq!(v["sample_size"], "exact");
    let ks = v["ks_distance"].as_f64().unwrap();
    assert!(ks > 0.0 && ks < 1.0);
}

#[test]
fn sampling_is_deterministic() {
    let args = [
        "sample",
        "--n",
        "30",
        "--alpha",
        "4",
        "--replicates",
        "20",
        "--seed",
        "5",
        "--format",
        "csv",
    ];
    let csv = check_golden("sample_30_4_seed5.csv", &args);
    assert_eq!(stdout(&args), csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# n=30, alpha=4, seed=5, m="));
    assert_eq!(lines[1], "standardized");
    assert_eq!(lines.len(), 22);
    let v = parse(&check_golden(
        "sample_30_4_seed5.json",
        &[
            "sample",
            "--n",
            "30",
            "--alpha",
            "4",
            "--replicates",
            "20",
            "--seed",
            "5",
        ],
    ));
    assert_eq!(v["ks"]["sample_size"], 20);
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let printed = stdout(&["moments", "--n", "500", "--alpha", "n^0.5"]);
    let quiet = stdout(&[
        "moments",
        "--n",
        "500",
        "--alpha",
        "n^0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(quiet.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn alpha_expression_uses_ceiling() {
    let v = parse(&stdout(&["count", "--n", "10", "--alpha", "n^0.5"]));
    assert_eq!(v["alpha"], 4);
    let v = parse(&stdout(&[
        "check-growth",
        "--n",
        "1000000",
        "--alpha",
        "n^0.5",
    ]));
    assert_eq!(v["alpha"], 1000);
}

fn error_json(out: &Output) -> Value {
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    serde_json::from_str(&err).unwrap()
}

#[test]
fn regime_errors_exit_two() {
    let out = run(&["moments", "--n", "5", "--alpha", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "out_of_regime");

    let out = run(&["count", "--n", "5", "--alpha", "n^1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "domain");

    let out = run(&["count", "--n", "5", "--alpha", "two"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "domain");
}

#[test]
fn resource_cap_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_cyclecap"))
        .args(["count", "--n", "11", "--alpha", "3"])
        .env("CYCLECAP_MAX_N", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["error"], "resource");
    assert!(e["message"].as_str().unwrap().contains("cap 10"));

    let out = run(&["dist", "--n", "6000", "--alpha", "10"]);
    assert_eq!(out.status.code(), Some(1));
}
