use std::path::Path;
use std::process::{Command, Output};

use syk_teleport::config::{ExperimentConfig, Grid};

fn syk_teleport(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syk-teleport")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = ExperimentConfig { n: 6, n_avg: Some(2), ..ExperimentConfig::default() };
    cfg.calibration.n_avg = 2;
    cfg.calibration.g_grid = Grid::range(8.0, 12.0, 2.0);
    cfg.calibration.t_grid = Grid::range(2.0, 4.0, 1.0);
    cfg.amplitude.eps_grid = Grid::List(vec![0.0, 1.0]);
    let path = dir.join("tiny.toml");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path
}

#[test]
fn default_config_round_trips() {
    let out = syk_teleport(&["default-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.to_toml().unwrap(), ExperimentConfig::default().to_toml().unwrap());
}

#[test]
fn invalid_config_exits_with_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "n = 7\n").unwrap();
    let out = syk_teleport(&["calibrate", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("N must be even"), "{err}");

    let out = syk_teleport(&["calibrate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn amplitude_scan_writes_tables_and_config_copy() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = syk_teleport(&[
        "amplitude-scan",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "5",
        "--threads",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed = String::from_utf8(out.stdout).unwrap();
    for name in ["amplitude-scan.summary.tsv", "amplitude-scan.records.tsv"] {
        assert!(listed.contains(name), "{listed}");
        assert!(out_dir.join(name).is_file());
    }
    let summary = std::fs::read_to_string(out_dir.join("amplitude-scan.summary.tsv")).unwrap();
    assert!(summary.lines().next().unwrap().starts_with("experiment\t"));
    assert!(summary.lines().skip(1).all(|l| l.contains("\t5,6\t")), "{summary}");
    let copy = ExperimentConfig::load(&out_dir.join("amplitude-scan.config.toml")).unwrap();
    assert_eq!(copy.base_seed, 5);
    assert_eq!(copy.n, 6);
}
