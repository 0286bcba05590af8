//! End-to-end runs of the `waam-sim` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn waam_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waam-sim"))
        .args(args)
        .env_remove("WAAM_SIM_CONFIG")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn singular_transit_runs_and_records_the_dip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("st");
    let o = waam_sim(&["run", "--scenario", "singular-transit", "--out", out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["trace.csv", "reference.csv", "summary.json", "layer_errors.csv", "rms.csv", "errors_position.svg", "trajectory_xy.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let min_sigma = summary["min_sigma"].as_f64().unwrap();
    let threshold = summary["sigma_threshold"].as_f64().unwrap();
    assert!(min_sigma < threshold, "{min_sigma} vs {threshold}");
    assert!(summary["singular_ticks"].as_u64().unwrap() > 0);
    let header = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(header.starts_with("t,theta1,"));
}

#[test]
fn both_formulations_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("both");
    let o = waam_sim(&["run", "--scenario", "singular-transit", "--formulation", "both", "--out", out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("augmented/trace.csv").is_file());
    assert!(out.join("constrained/trace.csv").is_file());
    assert!(out.join("comparison.json").is_file());

    let o = waam_sim(&["compare", "--scenario", "inclined-wall", "--layers", "1", "--out", out_arg(&dir.path().join("cmp"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = waam_sim(&["run", "--scenario", "inclined-wall", "--layers", "2", "--seed", "9", "--eta", "decaying-sinusoid", "--out", out_arg(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["trace.csv", "reference.csv", "summary.json", "rms.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "scenario = \"singular-transit\"\nout = \"result\"\n\n[plan]\nlayers = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_waam-sim"))
        .arg("run")
        .env("WAAM_SIM_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("result/summary.json").is_file());
}

#[test]
fn malformed_chain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad_chain.toml"), "table_dof = 2\n[[joints]\n").unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "chain = \"bad_chain.toml\"\nscenario = \"singular-transit\"\n").unwrap();
    let o = waam_sim(&["run", "--config", out_arg(&config), "--out", out_arg(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("bad_chain.toml:2:"), "{msg}");
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "scenario = \"cylinder\"\n[sim]\ndt_typo = 0.1\n").unwrap();
    let o = waam_sim(&["run", "--config", out_arg(&config)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn too_many_layers_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = waam_sim(&["run", "--scenario", "bell-mouth", "--layers", "500", "--out", out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = waam_sim(&[
        "run",
        "--scenario",
        "singular-transit",
        "--eta",
        "decaying-sinusoid:amplitude=5,decay=0.01",
        "--out",
        out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverge"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let o = waam_sim(&["run", "--scenario", "singular-transit", "--out", out_arg(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn overlong_vector_in_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "scenario = \"singular-transit\"\n[plan]\nz_d = [0.0, 0.0, 1.0, 5.0]\n").unwrap();
    let o = waam_sim(&["run", "--config", out_arg(&config), "--out", out_arg(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("array of 3 numbers"), "{}", stderr(&o));
}
