use std::path::Path;
use std::process::{Command, Output};

use hypoflow::construct::catalog;
use hypoflow::io::{AlgebraDocument, Notation, StructureDocument};
use serde_json::Value;

fn hypoflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypoflow"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Failures carry exactly one JSON object on stderr.
fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

/// Writes `alg.json` and `structure.json` for a catalog entry with an su3 structure.
fn write_fixture(id: &str, dir: &Path) {
    let fx = catalog(id).unwrap();
    std::fs::write(
        dir.join("alg.json"),
        AlgebraDocument::from_algebra(&fx.alg, Notation::Differentials).to_json(),
    )
    .unwrap();
    std::fs::write(
        dir.join("structure.json"),
        StructureDocument::from_su3(&fx.su3.unwrap()).to_json(),
    )
    .unwrap();
}

#[test]
fn catalog_lists_fixture_ids() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypoflow(&["catalog"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "invtors-1"));
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypoflow(
        &[
            "flow",
            "missing.json",
            "s.json",
            "--method",
            "hitchin",
            "--t1",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["exit"], 2);
    let o = hypoflow(&["flow"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "usage");
    let o = hypoflow(&["reproduce", "no-such-scenario"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_separates_parse_errors_from_check_failures() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("bad.json"),
        r#"{"dim": 3, "differentials": {"e3": "e12 +"}}"#,
    )
    .unwrap();
    let o = hypoflow(&["validate", "bad.json"], p);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"]
        .as_str()
        .unwrap()
        .contains("at byte"));
    // [e1,e2] = e3, [e2,e3] = e1, [e1,e3] = e1 violates Jacobi.
    std::fs::write(
        p.join("nonlie.json"),
        r#"{"dim": 3, "brackets": [
            {"i": 1, "j": 2, "terms": [{"k": 3, "c": 1}]},
            {"i": 2, "j": 3, "terms": [{"k": 1, "c": 1}]},
            {"i": 1, "j": 3, "terms": [{"k": 1, "c": 1}]}]}"#,
    )
    .unwrap();
    let o = hypoflow(&["validate", "nonlie.json"], p);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "check");

    write_fixture("invtors-2", p);
    let o = hypoflow(
        &["validate", "alg.json", "--structure", "structure.json"],
        p,
    );
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert!(v["jacobi_residual"].as_f64().unwrap() <= 1e-12);
    assert!(v["structure"]["d_omega"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn torsion_reports_the_invariant_pair() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture("invtors-1", dir.path());
    let o = hypoflow(&["torsion", "alg.json", "structure.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["lambda1"].as_f64().unwrap() + 2.0).abs() < 1e-9);
    assert!((v["lambda2"].as_f64().unwrap() + 4.0).abs() < 1e-9);
    assert_eq!(v["invariant"], true);
}

#[test]
fn flow_then_holonomy() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_fixture("h7-cocal", p);
    let o = hypoflow(
        &[
            "flow",
            "alg.json",
            "structure.json",
            "--method",
            "reduced",
            "--t1",
            "1",
            "--out",
            "run",
        ],
        p,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["assembly_residual"].as_f64().unwrap() <= 1e-8);
    let csv = std::fs::read_to_string(p.join("run/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,g11,"));
    assert_eq!(
        csv.lines().count(),
        summary["samples"].as_u64().unwrap() as usize + 1
    );

    let o = hypoflow(&["holonomy", "run", "--samples", "4"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["dimension"], 15);
    assert_eq!(report["verdict"], "su4");
    let o = hypoflow(&["holonomy", "run/summary.json", "--samples", "2"], p);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_h7_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypoflow(&["reproduce", "h7-su4"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(
        out.contains("criterion 1: PASS") && out.contains("criterion 2: PASS"),
        "{out}"
    );
    assert!(!out.contains("FAIL"));
}
