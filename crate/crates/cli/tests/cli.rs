use std::path::PathBuf;
use std::process::{Command, Output};

fn finsler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("spawn finsler")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn classical_hardy_report() {
    let dir = scratch("classical");
    let o = finsler(&["run", "--scenario", "classical-hardy", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.join("classical-hardy.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["gate"]["target"].as_f64(), Some(0.25));
    let gap = v["reports"][0]["relative_gap"].as_f64().unwrap();
    assert!(gap > 0.0 && gap < 0.1, "{gap}");
    assert!(!v["reports"][0]["trace"].as_array().unwrap().is_empty());
}

#[test]
fn funk_curvature_table() {
    let o = finsler(&["curvature", "--metric", "funk", "--samples", "20", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 20);
    for r in rows {
        let k: f64 = r.last().unwrap().parse().unwrap();
        assert!((k + 0.25).abs() < 1e-6, "{k}");
    }
    let o = finsler(&["run", "--scenario", "funk-curvature", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&stdout(&o)).len(), 20);
}

#[test]
fn cutoff_sweep_has_four_rows() {
    let o = finsler(&["sweep", "--scenario", "t36", "--eps", "1e-2,1e-4,1e-6,1e-8", "--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    let q: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(q.windows(2).all(|w| w[1] < w[0]) && q.iter().all(|x| *x > 0.25), "{q:?}");
    // The final gap stays above the scenario's 10% limit at these ε.
    assert_eq!(code(&o), 1);
}

#[test]
fn comparison_margin_is_nonnegative() {
    let o = finsler(&["compare", "--lemma", "A2", "--model", "gaussian"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["worst_margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn malformed_config_reports_line_and_column() {
    let dir = scratch("malformed");
    let path = dir.join("bad.toml");
    std::fs::write(&path, "kind = \"hardy\"\nid = \"x\"\np = 2.0 2.0\n").unwrap();
    let o = finsler(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:3:"), "{err}");
}

#[test]
fn refusal_and_usage_codes() {
    let dir = scratch("refusal");
    let path = dir.join("funk.json");
    // Extremal family on an irreversible space.
    std::fs::write(
        &path,
        r#"{"kind": "hardy", "id": "r", "tag": "T1.1", "p": 2.0, "beta": -2.0,
            "model": {"model": "funk", "dim": 2}, "domain": {"kind": "whole_chart"},
            "family": {"kind": "extremal", "delta": 0.1, "s": 0.001}}"#,
    )
    .unwrap();
    assert_eq!(code(&finsler(&["run", "--scenario", path.to_str().unwrap()])), 3);
    assert_eq!(code(&finsler(&["hardy", "--scenario", "funk-curvature"])), 2);
    assert_eq!(code(&finsler(&["run", "--scenario", "no-such-scenario"])), 2);
    assert_eq!(code(&finsler(&["frobnicate"])), 2);
}

#[test]
fn numerical_failure_code() {
    let dir = scratch("numerical");
    let path = dir.join("tight.toml");
    let text = std::fs::read_to_string("../../scenarios/log-hardy.toml")
        .unwrap()
        .replace("rtol = 1e-5", "rtol = 1e-12")
        .replace("max_level = 5", "max_level = 2");
    std::fs::write(&path, text).unwrap();
    assert_eq!(code(&finsler(&["run", "--scenario", path.to_str().unwrap()])), 4);
}

#[test]
fn identical_inputs_give_identical_json() {
    let a = finsler(&["run", "--scenario", "brezis-vazquez", "--seed", "9"]);
    let b = finsler(&["run", "--scenario", "brezis-vazquez", "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = finsler(&["run", "--scenario", "brezis-vazquez", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn demo_prints_banner() {
    let o = finsler(&["demo-funk-infimum", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-acceptance demo"));
}
