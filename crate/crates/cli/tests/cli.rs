use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bvlift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvlift"))
        .args(args)
        .env_remove("BVLIFT_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = bvlift(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn sidecar(output: &str) -> Value {
    let text = std::fs::read_to_string(PathBuf::from(format!("{output}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn greedy_lift_of_sixty_degree_steps_has_length_pi() {
    let dir = tempfile::tempdir().unwrap();
    let seq = path(dir.path(), "seq.fld");
    let lifted = path(dir.path(), "lifted.fld");
    ok(&["make-field", "sequence", "--angles", "0,60,120,180", "-o", &seq]);
    ok(&["lift", "--mode", "greedy1d", &seq, "-o", &lifted]);
    let s = sidecar(&lifted);
    let tv = s["energy"]["total"].as_f64().unwrap();
    assert!((tv - std::f64::consts::PI).abs() < 1e-12, "{tv}");
    assert_eq!(s["projection_check"].as_f64().unwrap(), 0.0);
    // the lifted file is a readable unit field
    let e = json_stdout(&ok(&["energy", "--estimator", "directional", &lifted]));
    assert!((e["total"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn greedy_lift_needs_one_axis() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "c.fld");
    ok(&[
        "make-field",
        "constant",
        "--angles",
        "10",
        "--grid",
        "8",
        "-o",
        &f,
    ]);
    let out = bvlift(&["lift", "--mode", "greedy1d", &f, "-o", &path(dir.path(), "x.fld")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_field_has_zero_energy_for_every_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "c.fld");
    ok(&[
        "make-field",
        "constant",
        "--angles",
        "25",
        "--d",
        "3",
        "--grid",
        "64",
        "-o",
        &f,
    ]);
    for est in ["mollified", "directional", "embedded"] {
        for metric in ["geodesic", "euclidean_tensor"] {
            let e = json_stdout(&ok(&["energy", "--estimator", est, "--metric", metric, &f]));
            assert!(e["total"].as_f64().unwrap().abs() < 1e-12, "{est} {metric}: {e}");
        }
    }
}

#[test]
fn one_dimensional_jump_energy_is_the_jump_cost() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "jump.fld");
    ok(&[
        "make-field",
        "jump",
        "--axes",
        "1",
        "--grid",
        "100",
        "--angles",
        "0,50",
        "-o",
        &f,
    ]);
    let e = json_stdout(&ok(&["energy", "--estimator", "directional", &f]));
    assert!(
        (e["total"].as_f64().unwrap() - 50f64.to_radians()).abs() < 1e-12,
        "{e}"
    );
}

#[test]
fn half_vortex_rotation_lift_and_tensor_energy() {
    let dir = tempfile::tempdir().unwrap();
    let hv = path(dir.path(), "hv.fld");
    let lifted = path(dir.path(), "hv_lift.fld");
    ok(&["make-field", "half-vortex", "--grid", "256", "-o", &hv]);
    ok(&["lift", "--mode", "rotation", "--trials", "64", &hv, "-o", &lifted]);
    let s = sidecar(&lifted);
    let ratio = s["ratio"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() <= 0.1, "{ratio}");
    let energy = s["energy"]["total"].as_f64().unwrap();
    assert!((energy - 4.0).abs() <= 0.2, "{energy}");
    assert_eq!(s["rotation"].as_array().unwrap().len(), 2);
    assert_eq!(s["projection_check"].as_f64().unwrap(), 0.0);

    let e = json_stdout(&ok(&[
        "energy",
        "--estimator",
        "embedded",
        "--metric",
        "euclidean_tensor",
        &hv,
    ]));
    let tensor = e["total"].as_f64().unwrap();
    assert!(
        (tensor - std::f64::consts::PI).abs() <= 0.03 * std::f64::consts::PI,
        "{tensor}"
    );
}

#[test]
fn boundary_lift_of_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let u = path(dir.path(), "u.fld");
    let n0 = path(dir.path(), "n0.fld");
    let out = path(dir.path(), "n.fld");
    ok(&[
        "make-field",
        "constant",
        "--angles",
        "30",
        "--grid",
        "32",
        "-o",
        &u,
    ]);
    ok(&[
        "make-field",
        "constant",
        "--angles",
        "210",
        "--unit",
        "--grid",
        "32",
        "-o",
        &n0,
    ]);
    ok(&["lift", "--mode", "boundary", "--boundary", &n0, &u, "-o", &out]);
    let s = sidecar(&out);
    // boundary cells hold n0 itself, which differs from -rep by rounding
    assert!(s["projection_check"].as_f64().unwrap() < 1e-12);
    assert!(s["energy"]["total"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn boundary_mismatch_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let u = path(dir.path(), "u.fld");
    let n0 = path(dir.path(), "n0.fld");
    ok(&[
        "make-field",
        "constant",
        "--angles",
        "0",
        "--grid",
        "16",
        "-o",
        &u,
    ]);
    ok(&[
        "make-field",
        "constant",
        "--angles",
        "90",
        "--unit",
        "--grid",
        "16",
        "-o",
        &n0,
    ]);
    let out = bvlift(&[
        "lift",
        "--mode",
        "boundary",
        "--boundary",
        &n0,
        &u,
        "-o",
        &path(dir.path(), "n.fld"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cell"));
    let missing = bvlift(&["lift", "--mode", "boundary", &u, "-o", &path(dir.path(), "n.fld")]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn under_resolved_mollifier_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "c.fld");
    ok(&[
        "make-field",
        "constant",
        "--angles",
        "0",
        "--grid",
        "32",
        "-o",
        &f,
    ]);
    let out = bvlift(&["energy", "--estimator", "mollified", "--eps-over-h", "1.5", &f]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "bad.fld");
    std::fs::write(&f, "{\"version\": 1}\n1 2 3\n").unwrap();
    assert_eq!(bvlift(&["energy", &f]).status.code(), Some(2));
    assert_eq!(
        bvlift(&["energy", &path(dir.path(), "missing.fld")])
            .status
            .code(),
        Some(2)
    );
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, "{\"trials\": 0}").unwrap();
    assert_eq!(
        bvlift(&["--config", &cfg, "constants", "--k", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn constants_match_closed_forms() {
    let out = json_stdout(&ok(&[
        "constants",
        "--k",
        "2",
        "--ca",
        "2",
        "3",
        "--cj",
        "tensor",
        "--c1d",
    ]));
    let pi = std::f64::consts::PI;
    assert!((out["K_2"]["value"].as_f64().unwrap() - 2.0 / pi).abs() < 1e-9);
    assert!(out["C^a(2,3)"]["value"].as_f64().unwrap() >= 1.0 + 0.5f64.sqrt() - 1e-6);
    assert!((out["C^j(tensor)"]["value"].as_f64().unwrap() - (1.0 + 2.0 / pi)).abs() < 1e-9);
    assert!((out["C_1d(tensor)"]["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(out["K_2"]["method"], "quadrature");
}

#[test]
fn config_file_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "jump.fld");
    ok(&[
        "make-field",
        "jump",
        "--axes",
        "1",
        "--grid",
        "64",
        "--angles",
        "0,40",
        "-o",
        &f,
    ]);
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"metric": "euclidean_tensor", "seed": 5}"#).unwrap();
    let e = json_stdout(&ok(&[
        "--config",
        &cfg,
        "energy",
        "--estimator",
        "directional",
        &f,
    ]));
    assert_eq!(e["metric"], "euclidean_tensor");
    assert!((e["total"].as_f64().unwrap() - 40f64.to_radians().sin()).abs() < 1e-12);
    let e = json_stdout(&ok(&[
        "--config",
        &cfg,
        "energy",
        "--estimator",
        "directional",
        "--metric",
        "geodesic",
        &f,
    ]));
    assert_eq!(e["metric"], "geodesic");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let hv = path(dir.path(), "hv.fld");
    ok(&["make-field", "half-vortex", "--grid", "64", "-o", &hv]);
    let one = ok(&["--threads", "1", "energy", "--estimator", "directional", &hv]).stdout;
    let out = Command::new(env!("CARGO_BIN_EXE_bvlift"))
        .args(["--threads", "1", "energy", "--estimator", "directional", &hv])
        .env("BVLIFT_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(one, out.stdout);
}

#[test]
fn verify_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a");
    let b = path(dir.path(), "b");
    let args = |out: &str| {
        vec![
            "verify".to_string(),
            "--suite".into(),
            "all".into(),
            "--seed".into(),
            "7".into(),
            "--samples".into(),
            "20000".into(),
            "--grid".into(),
            "64".into(),
            "--trials".into(),
            "4".into(),
            "--output-dir".into(),
            out.to_string(),
        ]
    };
    let run = |out: &str| {
        let v = args(out);
        bvlift(&v.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let first = run(&a);
    let second = run(&b);
    assert!(matches!(first.status.code(), Some(0) | Some(1)));
    assert_eq!(first.status.code(), second.status.code());
    let ra = std::fs::read(Path::new(&a).join("report.json")).unwrap();
    let rb = std::fs::read(Path::new(&b).join("report.json")).unwrap();
    assert_eq!(ra, rb);
    let report: Value = serde_json::from_slice(&ra).unwrap();
    let checks = report.as_array().unwrap();
    assert!(checks.iter().all(|c| c.get("runtime_ms").is_none()));
    assert!(checks
        .iter()
        .any(|c| c["name"] == "half_vortex.euclidean_lifting_ratio"));
    assert!(Path::new(&a).join("identities.csv").exists());
    assert!(Path::new(&a).join("timings.json").exists());
}

#[test]
fn verify_identities_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = path(dir.path(), "out");
    let out = bvlift(&[
        "verify",
        "--suite",
        "identities",
        "--samples",
        "200000",
        "--output-dir",
        &out_dir,
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}
