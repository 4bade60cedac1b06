use std::process::{Command, Output};

use serde_json::Value;

const ONE: &str = r#"{"centers":[[0,0,1]],"gauge":"mean_distance"}"#;
const TWO: &str = r#"{"centers":[[0,0,1],[0,0,2.718281828459045]],"gauge":"mean_distance"}"#;

fn hypansatz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypansatz")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["check"] == name).unwrap()
}

#[test]
fn single_center_has_constant_ricci() {
    let out = hypansatz(&["certify", "--config", ONE, "--grid", "6", "--checks", "positivity,strong"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["passed"], true);
    let min = check(&rep, "positivity")["min"].as_f64().unwrap();
    assert!((min - 6.0).abs() < 1e-6, "{min}");
}

#[test]
fn two_centers_pass_every_pointwise_check() {
    let out = hypansatz(&["certify", "--config", TWO, "--grid", "8", "--checks", "positivity,strong,ric-operator,mu-bound"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    for name in ["positivity", "strong", "ric-operator", "mu-bound"] {
        assert_eq!(check(&rep, name)["passed"], true, "{name}");
    }
}

#[test]
fn five_center_orbifold_fails_with_witness() {
    let cfg = r#"{"centers":[[0,0,1],[0,0,1.1],[0,0,1.2],[0,0,1.3],[0,0,1.4]],"gauge":"mean_distance"}"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg).unwrap();
    let out = hypansatz(&["certify", "--config", path.to_str().unwrap(), "--checks", "orbifold"]);
    assert_eq!(out.status.code(), Some(1));
    let rep = json(&out);
    let witness = check(&rep, "orbifold")["details"]["negative_witness"].as_f64().unwrap();
    assert!(witness > 0.5 * 16f64.ln());
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = hypansatz(&[
            "certify", "--config", TWO, "--grid", "5", "--seed", "7", "--checks", "positivity",
            "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn csv_has_fixed_columns() {
    let out = hypansatz(&["certify", "--config", ONE, "--grid", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,y,z,s,eig1,eig2,eig3,eig4,positive_ricci,strongly_positive,ric_operator_nonneg"
    );
    assert!(lines.all(|l| l.split(',').count() == 11));
}

#[test]
fn invalid_requests_exit_2_without_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    for args in [
        vec!["certify", "--config", ONE, "--grid", "1", "--out", p],
        vec!["certify", "--config", ONE, "--eps", "9", "--rmax", "8", "--out", p],
        vec!["certify", "--config", ONE, "--checks", "nonsense", "--out", p],
        vec!["certify", "--config", ONE, "--checks", "mu-bound", "--out", p],
        vec!["certify", "--config", "/no/such/file.json", "--out", p],
        vec!["certify", "--config", r#"{"centers":[[0,0,-1]],"gauge":"zero"}"#, "--out", p],
        vec!["eval", "--config", ONE, "--point", "1,2"],
    ] {
        assert_eq!(hypansatz(&args).status.code(), Some(2), "{args:?}");
        assert!(!path.exists());
    }
}

#[test]
fn oracle_modes() {
    let flat = hypansatz(&["oracle", "--flat", "--samples", "10"]);
    assert_eq!(flat.status.code(), Some(0));
    assert!(json(&flat)["max_ricci_rel_error"].as_f64().unwrap() < 1e-10);

    let one = hypansatz(&["oracle", "--config", ONE, "--samples", "10"]);
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert!(json(&one)["max_ricci_rel_error"].as_f64().unwrap() < 1e-3);

    let two = hypansatz(&["oracle", "--config", TWO, "--samples", "10"]);
    assert_eq!(two.status.code(), Some(0));
    assert!(json(&two)["max_selfduality_residual"].as_f64().unwrap() < 1e-3);

    let off_axis = r#"{"centers":[[0,0,1],[1,0,1]],"gauge":"mean_distance"}"#;
    assert_eq!(hypansatz(&["oracle", "--config", off_axis]).status.code(), Some(2));
}

#[test]
fn eval_prints_a_report() {
    let out = hypansatz(&["eval", "--config", ONE, "--point", "0.3,0,2"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert!((rep["s"].as_f64().unwrap() - 24.0).abs() < 1e-9);
}
