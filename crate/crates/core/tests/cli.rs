//! End-to-end checks of the `dqw-geom` binary: exit codes, error reports,
//! overrides, and output files.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dqw-geom"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const GOOD: &str = r#"
[lattice]
p = 16
j = 20
eps = 0.05

[theta]
kind = "scale_factor"
a = "1+0.1*sin(t)"

[mode]
name = "curvature"
"#;

#[test]
fn successful_run_writes_files_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GOOD);
    let out = dir.path().join("results");
    let status = bin()
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("curvature.csv")).unwrap();
    assert!(text.starts_with("# P=16 J=20 eps=0.05 valid_j="));
    assert!(text.lines().nth(1).unwrap().starts_with("j,p,rho_s"));
}

#[test]
fn config_errors_exit_2_with_machine_readable_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &GOOD.replace("p = 16", "p = 7"));
    let output = bin().arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_slice(&output.stderr).expect("stderr is JSON");
    assert_eq!(report["error_kind"], "config");
    assert!(report["message"].as_str().unwrap().contains("P must be even"));
}

#[test]
fn runtime_domain_errors_exit_3_with_site_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &GOOD
            .replace("kind = \"scale_factor\"", "kind = \"expression\"")
            .replace("a = \"1+0.1*sin(t)\"", "expr = \"arccos(2+t)\""),
    );
    let output = bin().arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(report["error_kind"], "runtime");
    let msg = report["message"].as_str().unwrap();
    assert!(msg.contains("arccos") && msg.contains("j=") && msg.contains("p="), "{msg}");
}

#[test]
fn mode_override_switches_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GOOD);
    let out = dir.path().join("geo");
    let status = bin()
        .arg(&cfg)
        .args(["--mode", "geometry"])
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("geometry.csv").exists());
    assert!(!out.join("curvature.csv").exists());
}

#[test]
fn unknown_mode_override_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GOOD);
    let output = bin().arg(&cfg).args(["--mode", "paint"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_config_exits_2() {
    let output = bin().arg("/nonexistent/nope.toml").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GOOD);
    let (out1, out2) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out1, &out2] {
        let status = bin()
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .arg("--quiet")
            .env("DQW_GEOM_THREADS", "2")
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out1.join("curvature.csv")).unwrap();
    let b = std::fs::read(out2.join("curvature.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_format_emits_meta_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{GOOD}\n[output]\nformat = \"json\"\ndir = \"{}\"\n", dir.path().display()),
    );
    let status = bin().arg(&cfg).arg("--quiet").status().unwrap();
    assert!(status.success());
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("curvature.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["meta"]["P"], "16");
    assert!(doc["rows"].as_array().unwrap().len() > 10);
}
