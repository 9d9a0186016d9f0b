//! End-to-end tests of the binary: exit codes, artifact layout, determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contact-hj"))
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn malformed_configs_exit_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    // odd node count
    let cfg = write_cfg(
        tmp.path(),
        "bad_n.json",
        r#"{"scenario":"bad_n","kind":{"type":"solve","initial":{"type":"u1"},"horizon":1.0},"grid_n":17}"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.join("bad_n").exists(), "no outputs on validation error");

    // epsilon out of range
    let cfg = write_cfg(
        tmp.path(),
        "bad_eps.json",
        r#"{"scenario":"bad_eps","kind":{"type":"reach","epsilon":0.5},"grid_n":64}"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown hamiltonian id
    let cfg = write_cfg(
        tmp.path(),
        "bad_ham.json",
        r#"{"scenario":"bad_ham","kind":{"type":"weakkam"},"grid_n":64,"hamiltonian":{"id":"nope"}}"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown field rejected by the schema
    let cfg = write_cfg(
        tmp.path(),
        "bad_field.json",
        r#"{"scenario":"bad_field","kind":{"type":"weakkam"},"grid_n":64,"typo":1}"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn solve_scenario_emits_the_expected_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(
        tmp.path(),
        "solve.json",
        r#"{
            "scenario": "tiny_solve",
            "kind": {"type": "solve", "initial": {"type": "constant", "value": 0.5}, "horizon": 0.05, "solver": "both"},
            "grid_n": 64,
            "semigroup": {"n_v": 17, "stride": 20}
        }"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let dir = out.join("tiny_solve");
    for f in [
        "report.json",
        "manifest.json",
        "datum.csv",
        "datum.json",
        "trace_semi_lagrangian.csv",
        "trace_semi_lagrangian_summary.json",
        "trace_finite_difference.csv",
    ] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    // plot data in long format
    let plot = std::fs::read_to_string(dir.join("plot/trace_semi_lagrangian.csv")).unwrap();
    assert!(plot.starts_with("series,t,x,value"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "solve");
    assert!(report["semi_lagrangian"]["final_sup_norm"].as_f64().unwrap() > 0.5);

    // the manifest isolates the timestamp
    let manifest = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("generated_unix_time"));
    assert!(!std::fs::read_to_string(dir.join("report.json"))
        .unwrap()
        .contains("generated_unix_time"));
}

#[test]
fn action_scenario_emits_masked_rows_without_nan() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(
        tmp.path(),
        "action.json",
        r#"{
            "scenario": "tiny_action",
            "kind": {"type": "action", "x0": 0.0, "u0": 0.0, "t_max": 0.1},
            "grid_n": 64,
            "semigroup": {"n_v": 17, "stride": 10}
        }"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("tiny_action/field.csv")).unwrap();
    assert!(csv.starts_with("t,x,value,masked"));
    assert!(!csv.to_lowercase().contains("nan"));
    assert!(csv.lines().any(|l| l.trim_end().ends_with(",1")), "masked rows flagged");
}

#[test]
fn identical_configs_give_byte_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"{
        "scenario": "det",
        "kind": {"type": "solve", "initial": {"type": "u1"}, "horizon": 0.05, "solver": "semi_lagrangian"},
        "grid_n": 64,
        "semigroup": {"n_v": 17, "stride": 20}
    }"#;
    let cfg = write_cfg(tmp.path(), "det.json", body);
    let (out1, out2) = (tmp.path().join("o1"), tmp.path().join("o2"));
    for out in [&out1, &out2] {
        let status = bin().arg("run").arg(&cfg).arg("--out").arg(out).status().unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out1.join("det/report.json")).unwrap();
    let b = std::fs::read(out2.join("det/report.json")).unwrap();
    assert_eq!(a, b, "reports must be byte-identical");
    let a = std::fs::read(out1.join("det/trace_semi_lagrangian.csv")).unwrap();
    let b = std::fs::read(out2.join("det/trace_semi_lagrangian.csv")).unwrap();
    assert_eq!(a, b, "traces must be byte-identical");
}

#[test]
fn blow_up_data_are_reported_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(
        tmp.path(),
        "blow.json",
        r#"{
            "scenario": "blow",
            "kind": {"type": "solve", "initial": {"type": "constant", "value": 1.0}, "horizon": 12.0, "solver": "finite_difference"},
            "grid_n": 64
        }"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("blow/report.json")).unwrap())
            .unwrap();
    let t = report["finite_difference"]["blow_up_at"].as_f64().unwrap();
    assert!(t > 0.0 && t < 12.0, "blow-up time {t}");
}

#[test]
fn runtime_failures_exit_3_with_error_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // t_max passes structural validation but is below three field steps
    let cfg = write_cfg(
        tmp.path(),
        "short.json",
        r#"{
            "scenario": "short_field",
            "kind": {"type": "action", "x0": 0.0, "u0": 0.0, "t_max": 0.01},
            "grid_n": 64,
            "semigroup": {"n_v": 17}
        }"#,
    );
    let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("short_field/error.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(err["error_kind"], "numerical");
    assert!(err["message"].as_str().unwrap().contains("3 dt"));
}

#[test]
fn env_var_sets_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env_out");
    let cfg = write_cfg(
        tmp.path(),
        "env.json",
        r#"{
            "scenario": "env_case",
            "kind": {"type": "solve", "initial": {"type": "u1"}, "horizon": 0.02, "solver": "semi_lagrangian"},
            "grid_n": 64,
            "semigroup": {"n_v": 17}
        }"#,
    );
    let status = bin()
        .arg("run")
        .arg(&cfg)
        .env("CONTACT_HJ_OUT", &out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("env_case/report.json").exists());
}
