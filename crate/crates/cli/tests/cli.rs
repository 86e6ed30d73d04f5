//! End-to-end tests of the `shocknet` binary: subcommands, exit codes, and
//! rerun determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shocknet"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shocknet_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, input: &Path, out: &Path, seed: u64, graph: &str) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(
        &path,
        format!(
            "input = {}\noutput_dir = {}\nseed = {seed}\ngraph = {graph}\n\
             preprocessing = none\nstandardize = false\nvar_lag = 1\n\
             n_starts = 4\nn_restarts = 4\nhorizon = 5\n",
            input.display(),
            out.display()
        ),
    )
    .unwrap();
    path
}

fn synth_panel(dir: &Path, seed: u64) -> PathBuf {
    let out = dir.join("synth");
    let status = bin()
        .args([
            "synth",
            "--n",
            "6",
            "--t",
            "800",
            "--graph",
            "pcpg",
            "--seed",
            &seed.to_string(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    out.join("panel.csv")
}

#[test]
fn synth_then_run_succeeds() {
    let dir = temp_dir("run");
    let input = synth_panel(&dir, 11);
    assert!(dir.join("synth/truth.json").exists());

    let out = dir.join("out");
    let cfg = write_config(&dir, &input, &out, 11, "pcpg");
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    for f in [
        "graph.dot",
        "graph.json",
        "var_model.json",
        "svar_model.json",
        "irf.csv",
        "identification.json",
        "manifest.json",
        "run.log",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("shock trace"), "{stdout}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn rerun_same_seed_is_byte_identical() {
    let dir = temp_dir("det");
    let input = synth_panel(&dir, 12);
    let out = dir.join("out");
    let cfg = write_config(&dir, &input, &out, 12, "pcpg");
    assert!(bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());
    let irf1 = std::fs::read(out.join("irf.csv")).unwrap();
    let man1 = std::fs::read(out.join("manifest.json")).unwrap();
    assert!(bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());
    assert_eq!(irf1, std::fs::read(out.join("irf.csv")).unwrap());
    assert_eq!(man1, std::fs::read(out.join("manifest.json")).unwrap());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_exit_2() {
    let dir = temp_dir("cfg");
    // missing config file
    let output = bin()
        .args(["run", "--config", "/nonexistent/nope.conf"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // config without a seed
    let cfg = dir.join("bad.conf");
    std::fs::write(&cfg, "input = a.csv\n").unwrap();
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("seed"));

    // malformed --set
    let cfg2 = dir.join("ok.conf");
    std::fs::write(&cfg2, "input = a.csv\nseed = 1\n").unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg2)
        .args(["--set", "novalue"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn under_identified_pmfg_exits_3() {
    let dir = temp_dir("ident");
    let input = synth_panel(&dir, 13);
    let out = dir.join("out");
    let cfg = write_config(&dir, &input, &out, 13, "pmfg");
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(
        output.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(String::from_utf8_lossy(&output.stderr).contains("identification"));
    assert!(!out.join("manifest.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn graph_only_writes_graph_artifacts() {
    let dir = temp_dir("gonly");
    let input = synth_panel(&dir, 14);
    let out = dir.join("out");
    let cfg = write_config(&dir, &input, &out, 14, "pcpg");
    let status = bin()
        .args(["graph-only", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("graph.dot").exists());
    assert!(out.join("identification.json").exists());
    assert!(!out.join("irf.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn check_ident_prints_report() {
    let output = bin()
        .args(["check-ident", "--kind", "pmfg", "--n", "11"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).expect("stdout is JSON");
    assert_eq!(report["identified"], serde_json::Value::Bool(true));
    assert_eq!(report["restrictions"], serde_json::json!(56));

    let output = bin()
        .args(["check-ident", "--kind", "pmfg", "--n", "10"])
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["identified"], serde_json::Value::Bool(false));
}
