use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hconvex").chain(args.iter().copied());
    let code = hconvex::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("{e}: {s}"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn corpus_list_and_help() {
    let (code, out, _) = run(&["corpus", "list"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out).as_array().unwrap().len(), 9);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["envelope", "--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["check-hconvex", "--field", "nope"]).0, 2);
    assert_eq!(run(&["s-apply", "--field", "one_step", "--res", "4"]).0, 2);
    assert_eq!(run(&["s-apply", "--field", "one_step", "--window", "1,4"]).0, 2);
    assert_eq!(run(&["s-apply", "--field", "one_step", "--box", "0,0,0,1,1"]).0, 2);
    let (code, _, err) = run(&["reproduce", "nope"]);
    assert_eq!(code, 2);
    assert!(err.contains("nope"));
}

#[test]
fn check_hconvex_verdicts() {
    let (code, out, _) = run(&["check-hconvex", "--field", "hconvex_sol", "--samples", "300"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["verdict"], "pass");
    let (code, out, _) = run(&["check-hconvex", "--field", "no_symmetry", "--region", "0,0,0,0.05,0.05,0.05"]);
    assert_eq!(code, 1);
    let v = json(&out);
    assert_eq!(v["verdict"], "fail");
    assert!(v["worst_point"]["x"].as_f64().unwrap().abs() <= 0.05);
    let (code, _, _) = run(&["check-hconvex", "--field", "hconvex_right_example", "--side", "right", "--samples", "300"]);
    assert_eq!(code, 0);
}

#[test]
fn pde_residual_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"alpha": 0.2, "beta": 0, "directions": [], "f": "hconvex_sol:rhs"}"#).unwrap();
    let (code, out, _) = run(&["pde-residual", "--spec", path(&spec), "--solution", "hconvex_sol"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["kind"], "semilinear");
    assert!(v["max_abs_residual"].as_f64().unwrap() <= 1e-4);
    let (code, _, _) = run(&["pde-residual", "--spec", path(&spec), "--solution", "one_step"]);
    assert_eq!(code, 1);
    let transport = dir.path().join("t.json");
    fs::write(&transport, r#"{"kind": "linear_transport", "zeta": [0, 2], "f": "no_symmetry:rhs"}"#).unwrap();
    assert_eq!(run(&["pde-residual", "--spec", path(&transport), "--solution", "no_symmetry"]).0, 0);
    assert_eq!(run(&["pde-residual", "--spec", path(&dir.path().join("missing.json")), "--solution", "x"]).0, 2);
}

#[test]
fn s_apply_writes_a_readable_grid_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let trace = dir.path().join("points.txt");
    fs::write(&trace, "# x,y,z\n0,0,0.5\n0.25,0,0\n").unwrap();
    let (code, stdout, err) = run(&[
        "s-apply", "--field", "two_step", "--box", "0,0,0,1.5,1.5,1.5", "--res", "7", "--window", "2,17",
        "--out", path(&out), "--encoding", "f64le", "--trace", path(&trace),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(dir.path().join("s.f64").exists());
    let t = json(&stdout);
    let entries = t.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    let first = &entries[0]["combination"];
    let weights: f64 = first["weights"].as_array().unwrap().iter().map(|w| w.as_f64().unwrap()).sum();
    assert!((weights - 1.0).abs() < 1e-9);
    // On the axis the plane is horizontal and two_step is constant on it.
    assert!((first["value"].as_f64().unwrap() - 0.5625).abs() < 1e-12);
    assert!(entries[1]["combination"]["value"].as_f64().unwrap() < 5e-2);

    let (code, report, _) = run(&["check-hconvex", "--field", path(&out)]);
    assert!(code == 0 || code == 1);
    assert!(json(&report)["samples_checked"].as_u64().unwrap() > 0);

    let again = dir.path().join("again.json");
    let (code, _, err) = run(&["s-apply", "--field", path(&out), "--window", "2,17", "--out", path(&again)]);
    assert_eq!(code, 0, "{err}");
    assert!(dir.path().join("again.csv").exists());
}

#[test]
fn s_apply_inline_output() {
    let (code, out, _) = run(&["s-apply", "--field", "hconvex_sol", "--box", "0,0,0,1,1,1", "--res", "5", "--window", "1,9"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["grid"]["payload"]["values"].as_array().unwrap().len(), 125);
    assert!(v.get("trace").is_none());
}

#[test]
fn escaping_minimizers_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("saddle.json");
    fs::write(&field, r#"{"polynomial": [[-1, 2, 0, 0], [-1, 0, 2, 0]]}"#).unwrap();
    let trace = dir.path().join("p.json");
    fs::write(&trace, "[[0, 0, 0]]").unwrap();
    let (code, _, err) = run(&[
        "s-apply", "--field", path(&field), "--box", "0,0,0,1,1,1", "--res", "3", "--window", "1,5", "--trace", path(&trace),
    ]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn envelope_report_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env.json");
    let (code, _, err) = run(&[
        "--threads", "2", "envelope", "--field", "one_step", "--box", "0,0,0,1.5,1.5,1.5", "--res", "9",
        "--window", "2,17", "--max-iter", "10", "--out", path(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&fs::read_to_string(&out).unwrap());
    assert_eq!(v["converged"], true);
    assert!(v["iterations"].as_u64().unwrap() >= 1);
    assert_eq!(v["final"]["payload"]["file"], "env.csv");
    assert!(v["max_increase"].as_f64().unwrap() <= 1e-9);
    let (code, report, err) = run(&["check-hconvex", "--field", path(&out)]);
    assert!(code == 0 || code == 1, "{err}");
    assert!(json(&report)["samples_checked"].as_u64().unwrap() > 0);
}

#[test]
fn reproduce_writes_report_and_flags_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, _, _) = run(&["reproduce", "no_symmetry", "--out", path(&out)]);
    assert_eq!(code, 0);
    assert_eq!(json(&fs::read_to_string(&out).unwrap())["passed"], true);

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 3}"#).unwrap();
    assert_eq!(run(&["reproduce", "hconvex_right_example", "--config", path(&cfg)]).0, 0);
    fs::write(&cfg, "{").unwrap();
    assert_eq!(run(&["reproduce", "hconvex_right_example", "--config", path(&cfg)]).0, 2);

    let (code, _, err) = run(&["reproduce", "failure"]);
    assert_eq!(code, 1);
    assert!(err.contains("midpoint_defect"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_hconvex");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["corpus", "list"]), Some(0));
    assert_eq!(status(&["check-hconvex", "--field", "no_symmetry", "--region", "0,0,0,0.05,0.05,0.05"]), Some(1));
    assert_eq!(status(&["reproduce", "nope"]), Some(2));
}
