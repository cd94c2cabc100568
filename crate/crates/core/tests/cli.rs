mod common;

use std::fs;
use std::path::PathBuf;

use assert_cmd::Command;
use common::fixture;

fn gapsearch() -> Command {
    Command::cargo_bin("gapsearch").unwrap()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn stdout_of(args: &[&str]) -> String {
    let out = gapsearch().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn expected_times_match_golden_files() {
    for s in ["ex1_normal", "ex1_cauchy", "ex1_skew_normal", "ex2_normal", "ex1_gamma"] {
        let got = stdout_of(&["expected-times", &path_str(s)]);
        assert_eq!(got, golden(&format!("expected_{s}.csv")), "{s}");
    }
}

#[test]
fn baselines_match_golden_files() {
    for s in ["ex1_normal", "ex1_cauchy", "ex1_skew_normal", "ex2_normal", "ex1_gamma"] {
        let got = stdout_of(&["baseline", &path_str(s)]);
        assert_eq!(got, golden(&format!("baseline_{s}.csv")), "{s}");
    }
}

#[test]
fn classify_names_the_layout() {
    assert_eq!(stdout_of(&["classify", &path_str("ex3_normal")]), "symmetric\n");
    assert_eq!(stdout_of(&["classify", &path_str("ex2_cauchy")]), "uneven\n");
    assert_eq!(stdout_of(&["classify", &path_str("ex1_gamma")]), "half-line\n");
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    fs::write(&bad, "[distribution]\nkind = normal\nmean = 0\nstd_dev = 1\nbogus = 3\n").unwrap();
    let out = gapsearch().args(["classify", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.ini:5"), "{err}");

    let missing = dir.path().join("missing.ini");
    let out = gapsearch().args(["classify", missing.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    fs::write(&bad, "[distribution]\nkind = normal\nmean = 0\nstd_dev = 1\n[truncation]\nright = (2,7) (5,9)\n").unwrap();
    let out = gapsearch().args(["expected-times", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_3() {
    let out = gapsearch()
        .args(["contour", &path_str("ex4_normal_one_gap"), "--m", "99"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("times.csv");
    let out = gapsearch()
        .args(["expected-times", &path_str("ex1_normal"), "--output", target.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read_to_string(&target).unwrap(), golden("expected_ex1_normal.csv"));
}

#[test]
fn validate_is_deterministic() {
    let args = ["validate", &path_str("ex2_cauchy"), "--n", "20000", "--seed", "9"];
    let first = stdout_of(&args);
    assert_eq!(first, stdout_of(&args));
    assert!(first.contains("generator = pcg64"));
    let other = stdout_of(&["validate", &path_str("ex2_cauchy"), "--n", "20000", "--seed", "10"]);
    assert_ne!(first, other);
}

#[test]
fn pdf_integrates_to_one() {
    let text = stdout_of(&["pdf", &path_str("ex1_normal"), "--points", "4001"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert!(rows.windows(2).all(|w| w[0].0 <= w[1].0));
    let area: f64 = rows.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    assert!((area - 1.0).abs() < 5e-3, "{area}");
}

#[test]
fn contour_emits_feasible_nodes() {
    let text = stdout_of(&[
        "contour",
        &path_str("ex4_gamma_one_gap"),
        "--x-range",
        "0:30:11",
        "--y-range",
        "0:30:11",
        "--threads",
        "2",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,expected"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    // upper triangle including the diagonal, minus the row where the gap reaches b
    assert_eq!(rows.len(), 55);
    assert!(rows.iter().all(|r| r[0] <= r[1] && r[2].is_finite() && r[2] >= 0.0));
}

#[test]
fn optimize_reports_summary_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let text = stdout_of(&["optimize", &path_str("ex1_cauchy"), "--trace", trace.to_str().unwrap()]);
    for key in ["left_gap_1", "right_gap_2", "penalized_objective", "unpenalized_objective_start", "converged"] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
    let trace = fs::read_to_string(&trace).unwrap();
    assert!(trace.starts_with("iteration,objective,grad_norm,damping\n"));
    assert!(trace.lines().count() > 2);
}
