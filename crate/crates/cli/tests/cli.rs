#![allow(clippy::excessive_precision)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fracgeom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracgeom"))
        .current_dir(dir)
        .env_remove("FRACGEOM_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn fixtures() -> TempDir {
    let d = tempfile::tempdir().unwrap();
    let put = |name: &str, text: &str| fs::write(d.path().join(name), text).unwrap();
    put("interval.json", r#"{"kind": "box", "lower": [0], "upper": [1]}"#);
    put("square.json", r#"{"kind": "box", "lower": [0, 0], "upper": [1, 1]}"#);
    put("ball2.json", r#"{"kind": "ball", "dim": 2, "radius": 1}"#);
    put("bad.json", "{\n  \"kind\": \"box\",\n  \"lower\": [0, 0],\n  \"uper\": [1, 1]\n}\n");
    d
}

fn constant(out: &Output, name: &str) -> f64 {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["constants"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("{name} missing"))["value"]
        .as_f64()
        .unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn constants_ball_perimeter() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["constants", "--n", "2", "--s", "0.5"]);
    assert_eq!(code(&o), 0);
    // chord form (2 pi/(s(1-s))) int_{-1}^{1} (2 sqrt(1-y^2))^{1-s} dy, mpmath at 25 digits
    assert!(rel(constant(&o, "ps_ball"), 62.130_638_777_779_803_67) < 1e-12);
}

#[test]
fn constants_p_and_sharp_constant() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["constants", "--n", "2", "--p", "2"]);
    assert_eq!(code(&o), 0);
    assert!((constant(&o, "radial_mean_ball_ratio") - 1.0).abs() < 1e-12);
    let o = fracgeom(d.path(), &["constants", "--n", "1", "--s", "0.5"]);
    assert!((constant(&o, "sharp_constant") - 0.0625).abs() < 1e-14);
    let o = fracgeom(d.path(), &["constants", "--n", "1", "--s", "0.3,0.5"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["constants"].as_array().unwrap().len(), 6);
}

#[test]
fn constants_usage_errors() {
    let d = fixtures();
    assert_eq!(code(&fracgeom(d.path(), &["constants", "--n", "2", "--s", "0.5", "--p", "1"])), 2);
    assert_eq!(code(&fracgeom(d.path(), &["constants", "--n", "2", "--s", "1.5"])), 2);
    assert_eq!(code(&fracgeom(d.path(), &["constants", "--n", "2", "--p", "-1"])), 2);
    assert_eq!(code(&fracgeom(d.path(), &["constants", "--n", "2"])), 2);
}

#[test]
fn interval_ppbody_gauge() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["body", "interval.json", "--op", "ppbody", "--s", "0.5", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&d.path().join("o/interval.ppbody.csv"));
    assert_eq!(header, ["index", "x", "weight", "radius", "gauge"]);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(rel(r[4], 64.0) < 1e-6);
    }
    let meta: Value = serde_json::from_slice(&fs::read(d.path().join("o/interval.ppbody.json")).unwrap()).unwrap();
    assert_eq!(meta["n"], 1);
    assert_eq!(meta["s"], 0.5);
    assert!(meta["field_hash"].as_str().unwrap().len() == 64);
    assert!(meta["config_digest"].is_string());
}

#[test]
fn square_ppbody_matches_covariogram() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["body", "square.json", "--op", "ppbody", "--s", "0.5", "--out", "o"]);
    assert_eq!(code(&o), 0);
    let (_, rows) = csv_rows(&d.path().join("o/square.ppbody.csv"));
    assert_eq!(rows.len(), 256);
    let s: f64 = 0.5;
    // |E| - g(t e1) = min(t, 1): integral of 2 t^{-s-1} min(t, 1)
    let axis = 2.0 / (s * (1.0 - s));
    assert!(rel(rows[0][5], axis.powf(1.0 / s)) < 1e-6);
    // diagonal: |E| - g = 1 - (1 - a)_+^2 with a = t / sqrt 2
    let diag = 2.0 * 2f64.powf(-s / 2.0) * (2.0 / (1.0 - s) - 1.0 / (2.0 - s) + 1.0 / s);
    assert!((rows[32][1] - rows[32][2]).abs() < 1e-12);
    assert!(rel(rows[32][5], diag.powf(1.0 / s)) < 1e-6);
}

#[test]
fn square_projbody_support() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["body", "square.json", "--op", "projbody", "--out", "o"]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&d.path().join("o/square.projbody.csv"));
    assert_eq!(header.last().unwrap(), "support");
    for r in &rows {
        assert!((r[4] - (r[1].abs() + r[2].abs())).abs() < 1e-12);
    }
}

#[test]
fn interval_rpbody() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["body", "interval.json", "--op", "rpbody", "--p", "1", "--out", "o"]);
    assert_eq!(code(&o), 0);
    // mean distance to the end of [0, 1] from a uniform point
    let (_, rows) = csv_rows(&d.path().join("o/interval.rpbody.csv"));
    for r in &rows {
        assert!((r[3] - 0.5).abs() < 1e-12);
    }
    assert_eq!(code(&fracgeom(d.path(), &["body", "interval.json", "--op", "rpbody", "--s", "0.5"])), 2);
}

#[test]
fn env_var_sets_output_dir() {
    let d = fixtures();
    let o = Command::new(env!("CARGO_BIN_EXE_fracgeom"))
        .current_dir(d.path())
        .env("FRACGEOM_OUT", "from_env")
        .args(["body", "square.json", "--op", "projbody"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(d.path().join("from_env/square.projbody.csv").exists());
}

fn report_lines(o: &Output) -> Vec<Value> {
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    text.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn verify_frac_petty_square() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["verify", "--suite", "frac_petty", "--body", "square.json", "--s", "0.5", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports = report_lines(&o);
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["report"]["verdict"] == "pass"));
    let saved = fs::read(d.path().join("o/verify-frac_petty.jsonl")).unwrap();
    assert_eq!(saved, o.stdout);
}

#[test]
fn verify_limits_ball() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["verify", "--suite", "limits", "--field", "ball2.json", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports = report_lines(&o);
    assert_eq!(reports.len(), 3);
    for r in &reports {
        let notes = r["report"]["notes"].to_string();
        assert!(notes.contains("residual"), "{notes}");
    }
}

#[test]
fn verify_all_is_deterministic() {
    let d = fixtures();
    let a = fracgeom(d.path(), &["verify", "--suite", "all", "--seed", "7", "--out", "a"]);
    let b = fracgeom(d.path(), &["verify", "--suite", "all", "--seed", "7", "--out", "b"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        fs::read(d.path().join("a/verify-all.jsonl")).unwrap(),
        fs::read(d.path().join("b/verify-all.jsonl")).unwrap()
    );
    let c = fracgeom(d.path(), &["verify", "--suite", "mean_radial", "--seed", "8", "--out", "c"]);
    let a_mean: Vec<Value> = report_lines(&a).into_iter().filter(|r| r["suite"] == "mean_radial").collect();
    assert_ne!(a_mean, report_lines(&c));
}

#[test]
fn error_exit_codes() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["verify", "--suite", "nope"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("frac_petty"));

    let o = fracgeom(d.path(), &["body", "bad.json", "--op", "projbody"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("uper"), "{err}");

    assert_eq!(code(&fracgeom(d.path(), &["body", "missing.json", "--op", "projbody"])), 5);

    let o = fracgeom(d.path(), &["verify", "--suite", "classical_petty", "--body", "ball2.json", "--out", "o"]);
    assert_eq!(code(&o), 4);

    fs::write(d.path().join("tight.json"), r#"{"near_equality": 1e-300}"#).unwrap();
    let o = fracgeom(
        d.path(),
        &["verify", "--suite", "frac_petty", "--body", "ball2.json", "--s", "0.5", "--tolerance-file", "tight.json", "--out", "o"],
    );
    assert_eq!(code(&o), 1);

    fs::write(d.path().join("typo.json"), r#"{"near_equalty": 1e-3}"#).unwrap();
    let o = fracgeom(d.path(), &["verify", "--suite", "frac_petty", "--tolerance-file", "typo.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn help_documents_exit_codes() {
    let d = fixtures();
    let o = fracgeom(d.path(), &["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for c in ["0  success", "1  ", "2  usage", "3  malformed", "4  computation", "5  file system"] {
        assert!(text.contains(c), "{c}");
    }
}
