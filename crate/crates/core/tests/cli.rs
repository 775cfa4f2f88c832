//! Runs the `posgp` binary end to end.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("posgp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_posgp"))
        .args(args)
        .output()
        .unwrap();
    let code = out.status.code().unwrap();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BOUNDED: &str = r#"
variables = ["theta"]

[system]
atilde = [[0]]
r = ["theta"]
b = [[1]]
c = [[1]]

[cost]
expr = "theta"

[theta]
constraints = ["theta/4"]
"#;

#[test]
fn scalar_hinf_design() {
    let (code, r) = run(&[
        "solve-hinf",
        path(&fixture("scalar.toml")),
        "--gamma",
        "0.5",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["status"], "Optimal");
    let theta = r["theta"][0]["value"].as_f64().unwrap();
    assert!((theta - 2.0).abs() < 0.01, "{theta}");
    let hinf = r["oracle"]["hinf"].as_f64().unwrap();
    assert!(hinf < 0.5);
    assert!(r["certificate"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
}

#[test]
fn oracle_at_a_given_point() {
    let (code, r) = run(&[
        "oracle",
        path(&fixture("scalar.toml")),
        "--theta-file",
        path(&fixture("scalar_point.txt")),
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["status"], "Evaluated");
    let o = &r["oracle"];
    assert!((o["h2"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((o["hinf"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((o["hankel_sv"][0].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((o["spectral_abscissa"].as_f64().unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn sweep_cost_falls_as_the_bound_loosens() {
    let (code, r) = run(&[
        "sweep",
        "solve-hinf",
        path(&fixture("scalar.toml")),
        "--gamma-grid",
        "0.5:0.25:2",
    ]);
    assert_eq!(code, 0);
    let recs = r["records"].as_array().unwrap();
    assert_eq!(recs.len(), 7);
    let costs: Vec<f64> = recs.iter().map(|x| x["cost"].as_f64().unwrap()).collect();
    assert!(
        costs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)),
        "{costs:?}"
    );
}

#[test]
fn infeasible_exits_2() {
    let file = scratch("bounded.toml", BOUNDED);
    let (code, r) = run(&["solve-hinf", path(&file), "--gamma", "0.1"]);
    assert_eq!(code, 2);
    assert_eq!(r["status"], "Infeasible");
}

#[test]
fn bad_input_exits_3() {
    let (code, _) = run(&["solve-hinf", "/definitely/not/here.toml"]);
    assert_eq!(code, 3);
    let file = scratch(
        "broken.toml",
        "variables = [\"theta\"]\n[system]\natilde = [[\"-theta\"]]\n",
    );
    let (code, r) = run(&["solve-hinf", path(&file), "--gamma", "1"]);
    assert_eq!(code, 3);
    assert_eq!(r["status"], "InvalidInput");
}

#[test]
fn iteration_limit_exits_4() {
    let file = scratch(
        "short.toml",
        &format!("{BOUNDED}\n[solver]\nmax_iters = 1\n"),
    );
    let (code, r) = run(&["solve-hinf", path(&file), "--gamma", "0.5"]);
    assert_eq!(code, 4, "{r}");
}

#[test]
fn robust_reports_are_reproducible_under_a_seed() {
    let file = fixture("robust.toml");
    let args = [
        "solve-robust",
        path(&file),
        "--gamma",
        "0.1",
        "--seed",
        "7",
        "--samples",
        "300",
    ];
    let (c1, a) = run(&args);
    let (c2, b) = run(&args);
    assert_eq!(c1, 0);
    assert_eq!(c1, c2);
    assert_eq!(a, b);
}

#[test]
fn echoed_problem_reproduces_the_report() {
    let (code, first) = run(&["solve-mixed", path(&fixture("mixed.toml"))]);
    assert_eq!(code, 0);
    let echo = first["problem"].as_str().unwrap();
    let file = scratch("echo.toml", echo);
    let (code, second) = run(&["solve-mixed", path(&file)]);
    assert_eq!(code, 0);
    assert_eq!(first["theta"], second["theta"]);
    assert_eq!(first["cost"], second["cost"]);
    assert_eq!(first["problem"], second["problem"]);
}
