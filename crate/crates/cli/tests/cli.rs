//! End-to-end checks of the binary: exit codes, report determinism,
//! problem round-trips, and the error paths.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mso")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const Z_PROBLEM: &str = r#"{
  "format": 1,
  "graph": {"generator": "lattice_z", "params": {}},
  "potential": {"constant": 0.0, "values": {"0": -1.0}},
  "fields": {"delta": {"0": [[1.0, 0.0]]}}
}"#;

const CYCLE_PROBLEM: &str = r#"{
  "format": 1,
  "graph": {"generator": "cycle", "params": {"len": 6}},
  "fields": {"delta": {"0": [[1.0, 0.0]]}, "zero_sum": {"0": [[1.0, 0.0]], "3": [[-1.0, 0.0]]}, "zero": {}}
}"#;

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.json", r#"{"format":1,"graph":{"generator":"lattice_z","params":{}}}"#);
    assert_eq!(code(&run(&["certify", z.to_str().unwrap()])), 0);

    let c6 = write(dir.path(), "c6.json", CYCLE_PROBLEM);
    assert_eq!(code(&run(&["certify", c6.to_str().unwrap()])), 2);

    // Positive-definite on a finite component: not refutable, not
    // certifiable — Undecided.
    let pd = write(
        dir.path(),
        "pd.json",
        r#"{"format":1,"graph":{"generator":"cycle","params":{"len":4}},"potential":{"constant":1.0}}"#,
    );
    assert_eq!(code(&run(&["certify", pd.to_str().unwrap()])), 3);

    let garbage = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(code(&run(&["certify", garbage.to_str().unwrap()])), 1);

    let unknown_field = write(
        dir.path(),
        "typo.json",
        r#"{"format":1,"graph":{"generator":"lattice_z","params":{}},"potental":{}}"#,
    );
    assert_eq!(code(&run(&["certify", unknown_field.to_str().unwrap()])), 1);
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let c6 = write(dir.path(), "c6.json", CYCLE_PROBLEM);

    // Zero-sum rhs lies in the image of the cycle Laplacian.
    let out = run(&[
        "solve",
        c6.to_str().unwrap(),
        "--rhs",
        "zero_sum",
        "--window-radius",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    let out = run(&[
        "solve",
        c6.to_str().unwrap(),
        "--rhs",
        "delta",
        "--window-radius",
        "3",
    ]);
    assert_eq!(code(&out), 2);

    // A zero right-hand side always solves, with g = 0.
    let out = run(&["solve", c6.to_str().unwrap(), "--rhs", "zero"]);
    assert_eq!(code(&out), 0);

    let out = run(&["solve", c6.to_str().unwrap(), "--rhs", "missing"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn reports_are_deterministic_up_to_timings() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.json", Z_PROBLEM);
    let strip = |path: &Path| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (out, _) in [(&a, 0), (&b, 1)] {
        run(&[
            "certify",
            z.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        serde_json::to_string(&strip(&a)).unwrap(),
        serde_json::to_string(&strip(&b)).unwrap()
    );

    let sa = dir.path().join("sa.json");
    let sb = dir.path().join("sb.json");
    for out in [&sa, &sb] {
        run(&[
            "solve",
            z.to_str().unwrap(),
            "--rhs",
            "delta",
            "--window-radius",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        serde_json::to_string(&strip(&sa)).unwrap(),
        serde_json::to_string(&strip(&sb)).unwrap()
    );
}

#[test]
fn embedded_problem_round_trips_through_reports() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.json", Z_PROBLEM);
    let report_path = dir.path().join("report.json");
    run(&[
        "solve",
        z.to_str().unwrap(),
        "--rhs",
        "delta",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();

    // The embedded problem is itself a loadable problem file.
    let embedded = write(
        dir.path(),
        "embedded.json",
        &report["problem"].to_string(),
    );
    let out = run(&[
        "solve",
        embedded.to_str().unwrap(),
        "--rhs",
        "delta",
        "--window-radius",
        "2",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn max_principle_table() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.json", Z_PROBLEM);
    let out = run(&[
        "max-principle",
        z.to_str().unwrap(),
        "--vertices",
        "0",
        "--vertices",
        "5",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAILS (beta = 0.5"), "{text}");
    assert!(text.contains("holds (V(x) >= 0)"), "{text}");

    // Bundle problems are rejected for this scalar-only audit.
    let bundled = write(
        dir.path(),
        "bundled.json",
        r#"{"format":1,"graph":{"generator":"cycle","params":{"len":3}},"bundle":{"dims":{"0":2,"1":2,"2":2}}}"#,
    );
    assert_eq!(code(&run(&["max-principle", bundled.to_str().unwrap()])), 1);
}

#[test]
fn verify_witness_error_paths() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write(
        dir.path(),
        "plain.json",
        r#"{"format":1,"graph":{"generator":"lattice_z","params":{}}}"#,
    );
    let report_path = dir.path().join("certified.json");
    run(&[
        "certify",
        plain.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    // A Certified report has no witness to replay.
    assert_eq!(code(&run(&["verify-witness", report_path.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["verify-witness", "/nonexistent.json"])), 1);
}

#[test]
fn undecided_form_refutation_carries_a_replayable_witness() {
    // v(0) = −1 on ℤ refutes both form conditions (wide tents have
    // arbitrarily small energy), so the verdict is Undecided and the
    // negative-form witness replays.
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "z.json", Z_PROBLEM);
    let report_path = dir.path().join("undecided.json");
    let out = run(&[
        "certify",
        z.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&run(&["verify-witness", report_path.to_str().unwrap()])), 0);
}

#[test]
fn demo_names() {
    for name in ["finite-component", "infinite-star", "hexagram"] {
        assert_eq!(code(&run(&["demo", name])), 0, "demo {name}");
    }
    assert_eq!(code(&run(&["demo", "unknown"])), 1);
}

#[test]
fn json_flag_emits_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write(
        dir.path(),
        "plain.json",
        r#"{"format":1,"graph":{"generator":"lattice_z","params":{}}}"#,
    );
    let out = run(&["certify", plain.to_str().unwrap(), "--json"]);
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout must be a JSON report");
    assert_eq!(v["command"], "certify");
    assert!(v["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert_eq!(v["payload"]["status"], "Certified");
}

#[test]
fn explicit_graphs_load_and_certify() {
    let dir = tempfile::tempdir().unwrap();
    // A path on three vertices: finite, so refuted by the constants.
    let p3 = write(
        dir.path(),
        "p3.json",
        r#"{"format":1,"graph":{"vertices":[0,1,2],"edges":[[0,1,1.0],[1,2,2.0]]}}"#,
    );
    assert_eq!(code(&run(&["certify", p3.to_str().unwrap()])), 2);

    // Mirrored duplicate edges are rejected.
    let dup = write(
        dir.path(),
        "dup.json",
        r#"{"format":1,"graph":{"vertices":[0,1],"edges":[[0,1,1.0],[1,0,1.0]]}}"#,
    );
    assert_eq!(code(&run(&["certify", dup.to_str().unwrap()])), 1);
}
