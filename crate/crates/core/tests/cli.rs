use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kuramoto-pis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const EXAMPLE2: &str =
    r#"{"graph": {"n": 4, "edges": [[1, 2], [1, 3], [2, 3], [1, 4]]}, "omega": [-0.1, 0.0, 0.3, -0.2]}"#;

#[test]
fn optimize_reports_minimum_total() {
    let dir = TempDir::new().unwrap();
    let sys = write(dir.path(), "sys.json", EXAMPLE2);
    let out = dir.path().join("opt.json");
    let o = bin(&["optimize", "--system", &sys, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert!((v["objective"].as_f64().unwrap() - 5.0).abs() < 1e-8);
    assert_eq!(v["constraints"], 11);
    assert_eq!(v["status"], "optimal");
}

#[test]
fn bound_lists_every_condition() {
    let dir = TempDir::new().unwrap();
    let sys = write(dir.path(), "sys.json", EXAMPLE2);
    let init = write(dir.path(), "init.json", r#"{"phases": [0.1, -0.2, 0.3, 0.0]}"#);
    let out = dir.path().join("b.json");
    let o = bin(&["bound", "--system", &sys, "--init", &init, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 5);

    let o = bin(&["bound", "--system", &sys, "--init", &init, "--condition", "theorem1"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("theorem1") && text.contains("2.000000"), "{text}");
}

#[test]
fn simulate_writes_csv() {
    let dir = TempDir::new().unwrap();
    let sys = write(
        dir.path(),
        "sys.json",
        r#"{"graph": {"n": 3, "edges": [[1, 2], [1, 3]]}, "omega": [1.9, -0.95, -0.95], "coupling": {"scalar": 3.0}}"#,
    );
    let init = write(dir.path(), "init.json", r#"{"phases": [0.0, 1.5707963, -1.5707963]}"#);
    let out = dir.path().join("traj/run.csv");
    let o = bin(&[
        "simulate", "--system", &sys, "--init", &init, "--tmax", "5", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "t,phi_1,phi_2,phi_3,dphi_1,dphi_2,dphi_3,D_t,V");
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn examples_pass_their_checks() {
    let dir = TempDir::new().unwrap();
    let o = bin(&["example2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dir.path().join("report.json").exists());

    let dir = TempDir::new().unwrap();
    let o = bin(&["example1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(!String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}

#[test]
fn experiment_output_is_byte_identical() {
    let run = || {
        let dir = TempDir::new().unwrap();
        let o = bin(&[
            "exp2", "--seed", "3", "--samples", "5", "--n-max", "6", "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.code().is_some());
        let csv = fs::read(dir.path().join("results.csv")).unwrap();
        let meta: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap())
                .unwrap();
        (csv, meta)
    };
    let (a, meta) = run();
    let (b, _) = run();
    assert_eq!(a, b);
    assert_eq!(meta["config"]["seed"], 3);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 2 * 5);
}

#[test]
fn bad_input_exits_with_error() {
    let dir = TempDir::new().unwrap();
    let sys = write(dir.path(), "sys.json", r#"{"graph": {"n": 2, "edges": [[1, 3]]}, "omega": [0, 0]}"#);
    let o = bin(&["optimize", "--system", &sys]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("error"));

    let o = bin(&["example1", "--eps", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
