use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tlgas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlgas")).args(args).env_remove("TLGAS_THREADS").output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().expect("stderr has a line")).expect("stderr is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tlgas-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn section<'a>(v: &'a Value, name: &str) -> &'a Value {
    v["sections"].as_array().unwrap().iter().find(|s| s["name"] == name).map(|s| &s["data"]).expect("section present")
}

#[test]
fn test_flags_override_config() {
    let dir = scratch("cfg");
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"ell": 3, "size": "2x2", "seed": 9}"#).unwrap();
    let cfg = cfg.to_str().unwrap();

    let v = report(&tlgas(&["--config", cfg, "tl", "jw", "--k", "2"]));
    assert_eq!(v["backend"], "special(3)");
    assert_eq!(v["flags"][0]["code"], "potts-q-level-3");

    let v = report(&tlgas(&["--config", cfg, "--ell", "2", "tl", "jw", "--k", "2"]));
    assert_eq!(v["backend"], "special(2)");
    assert!(v.get("flags").is_none());
}

#[test]
fn test_invalid_config_exits_2() {
    let dir = scratch("bad");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, r#"{"ell": 2, "colour": "blue"}"#).unwrap();
    for args in [
        vec!["--config", cfg.to_str().unwrap(), "table", "fig02"],
        vec!["--ell", "4", "tl", "jw", "--k", "2"],
        vec!["--ell", "0", "--backend", "float", "tl", "jw", "--k", "2"],
        vec!["--state-cap", "0", "table", "fig02"],
        vec!["--size", "3by3", "lattice", "build"],
    ] {
        let out = tlgas(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error(&out)["error"], "ConfigInvalid", "{args:?}");
    }
}

#[test]
fn test_resource_errors_exit_3() {
    let out = tlgas(&["--ell", "2", "lattice", "joint-kernel", "--torus", "2x2"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error(&out)["error"], "WindowDoesNotFit");

    let out = tlgas(&["--size", "4x4", "--state-cap", "1000", "lattice", "kernel"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error(&out)["error"], "StateSpaceTooLarge");
}

#[test]
fn test_fig02_csv_written() {
    let dir = scratch("fig02");
    report(&tlgas(&["table", "fig02", "--ellmax", "6", "--out", dir.to_str().unwrap()]));
    let csv = std::fs::read_to_string(dir.join("fig02.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 7);
    assert!(rows[3].starts_with("DE3,4,4,4,8"));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved["command"], "table fig02");
}

#[test]
fn test_kernel_dimensions_small_torus() {
    let v = report(&tlgas(&["--size", "2x2", "--ell", "2", "lattice", "kernel"]));
    let k = section(&v, "kernel");
    assert_eq!(k["exact_dim"], 10);
    assert_eq!(k["float_dim"], 10);
}

#[test]
fn test_sampler_deterministic_modulo_timing() {
    let run = || {
        let mut v = report(&tlgas(&["--size", "2x2", "--seed", "11", "gas", "sample", "--sweeps", "500", "--chains", "2"]));
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a["seed"], 11);
    let tv = section(&a, "sample")["tv_distance"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&tv));
}

#[test]
fn test_verify_reports_failures_with_exit_4() {
    let out = tlgas(&["verify", "1"]);
    let v = report(&out);
    assert_eq!(section(&v, "acceptance")[0]["pass"], true);

    let out = tlgas(&["verify", "6"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error(&out)["error"], "InvariantViolation");
}
