//! End-to-end tests of the arcspec binary: artifact emission, byte-level
//! determinism across runs, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn arcspec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arcspec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn curve_subcommand_emits_geometry_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "helix.json",
        r#"{"curve":{"kind":"helix-arc","params":{"a":0.5,"b":0.2},"L":2.0}}"#,
    );
    let out = arcspec(&["curve", "--config", &cfg, "--out", "run"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("run/curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1026, "header plus 1025 samples");
    assert!(csv.starts_with("s,x,y,z,gamma,tau,beta\n"));

    let geo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/geometry.json")).unwrap())
            .unwrap();
    assert_eq!(geo["kind"], "helix-arc");
    assert_eq!(geo["injectivity"]["pass"], true);
}

#[test]
fn spectrum_1d_recovers_box_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seg.json",
        r#"{"curve":{"kind":"segment","L":1.0},"n":2048}"#,
    );
    let out = arcspec(&["spectrum-1d", "--config", &cfg, "--out", "run"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run/spectrum_1d.csv")).unwrap();
    // Dirichlet ground state of the straight unit segment is pi^2.
    let lam1: f64 = csv
        .lines()
        .find(|l| l.starts_with("1,") && l.contains("dirichlet"))
        .expect("dirichlet j=1 row")
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    assert!((lam1 - pi2).abs() < 1e-4 * pi2, "lambda_1 = {lam1}");
    // Neumann ground state is 0 for the straight segment.
    let lam1n: f64 = csv
        .lines()
        .find(|l| l.starts_with("1,") && l.contains("neumann"))
        .expect("neumann j=1 row")
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(lam1n.abs() < 1e-6, "neumann lambda_1 = {lam1n}");
}

#[test]
fn spectrum_3d_and_count_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "small.json",
        r#"{"curve":{"kind":"segment","L":1.0},"alphas":[-0.25],"j_max":1,"n_q":512,"dump_matrix":true}"#,
    );
    for run in ["a", "b"] {
        let out = arcspec(
            &["spectrum-3d", "--config", &cfg, "--out", run, "--seed", "7"],
            dir.path(),
        );
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let cnt = arcspec(&["count", "--config", &cfg, "--out", run], dir.path());
        assert!(cnt.status.success(), "stderr: {}", String::from_utf8_lossy(&cnt.stderr));
    }
    for name in ["eigenpairs.csv", "bsmatrix.bin", "counting.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }

    let csv = std::fs::read_to_string(dir.path().join("a/eigenpairs.csv")).unwrap();
    let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let kappa: f64 = fields[2].parse().unwrap();
    let lambda: f64 = fields[3].parse().unwrap();
    assert!(kappa > 0.0 && lambda < 0.0);
    assert!((lambda + kappa * kappa).abs() < 1e-12 * kappa * kappa);
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();

    // Missing config file -> 2.
    let out = arcspec(&["count", "--config", "no-such.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // Malformed config -> 2, with a JSON error record on stderr.
    let bad = write_config(dir.path(), "bad.json", r#"{"curve":{"kind":"banana","L":1}}"#);
    let out = arcspec(&["count", "--config", &bad], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let record: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(record["error"], "config");
    assert!(record["message"].as_str().unwrap().contains("banana"));

    // Quadrature far too coarse for the coupling -> solver failure, 3.
    let coarse = write_config(
        dir.path(),
        "coarse.json",
        r#"{"curve":{"kind":"segment","L":1.0},"alphas":[-0.9],"j_max":1,"n_q":64}"#,
    );
    let out = arcspec(
        &["spectrum-3d", "--config", &coarse, "--out", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let record: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(record["error"], "solver");

    // Same failure under asymptotics --strict is reported per-row -> 4.
    let out = arcspec(
        &["asymptotics", "--config", &coarse, "--out", "y", "--strict"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    // Without --strict the failed row is recorded in the artifacts instead.
    let out = arcspec(
        &["asymptotics", "--config", &coarse, "--out", "z"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("z/expansion.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("nan"));
}
