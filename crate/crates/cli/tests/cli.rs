use std::path::Path;
use std::process::{Command, Output};

fn sgks(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgks"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SGKS_OUT_ROOT")
        .output()
        .expect("binary runs")
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = sgks(
        &["run", "--problem", "tp1", "--seed", "7", "--I", "6", "--Itilde", "4", "--out", "res"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let seed = dir.path().join("res/seed_7");
    for f in [
        "solution.csv",
        "oracle.csv",
        "timeseries.csv",
        "errors.csv",
        "summary.json",
        "manifest.json",
    ] {
        assert!(seed.join(f).is_file(), "{f}");
    }
    let summary = std::fs::read_to_string(seed.join("summary.json")).unwrap();
    assert!(summary.contains("\"max_rel\": 0."));
    let manifest = std::fs::read_to_string(seed.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"dt\": 0.005"));
    assert!(manifest.contains("\"dx\": 0.2"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("seed 7: max_rel"));
}

#[test]
fn linear_test_four_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = sgks(
        &["run", "--problem", "linear_test", "--seed", "0,1,2,3", "--I", "10", "--out", "lin"],
        dir.path(),
    );
    assert!(out.status.success());
    for s in 0..4 {
        assert!(dir.path().join(format!("lin/seed_{s}/errors.csv")).is_file());
    }
}

#[test]
fn default_output_root_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sgks"))
        .args(["run", "--problem", "linear_test", "--I", "4", "--oracle", "none"])
        .current_dir(dir.path())
        .env("SGKS_OUT_ROOT", dir.path().join("root"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let seed = dir.path().join("root/linear_test/seed_0");
    assert!(seed.join("solution.csv").is_file());
    assert!(!seed.join("errors.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = sgks(&["run", "--problem", "tp9"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
    let unstable = sgks(&["run", "--problem", "tp1", "--dt", "0.02"], dir.path());
    assert_eq!(unstable.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unstable.stderr).contains("--force"));
    let empty = sgks(&["sweep", "--problem", "tp1", "--axis", "dt", "--values"], dir.path());
    assert_eq!(empty.status.code(), Some(2));
    let bad_oracle = sgks(&["run", "--problem", "tp1", "--oracle", "analytic"], dir.path());
    assert_eq!(bad_oracle.status.code(), Some(2));
}

#[test]
fn forced_unstable_run_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = sgks(
        &["run", "--problem", "tp1", "--dt", "0.01", "--dx", "0.1", "--I", "2", "--Itilde", "2", "--force", "--out", "d"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = sgks(
        &["sweep", "--problem", "tp2", "--axis", "dt", "--values", "0.005,0.01,0.02", "--I", "4", "--Itilde", "4", "--dx", "0.4", "--out", "sw"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "value,seed,terminal_abs,max_rel,slope,status");
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.ends_with(",ok")));
}

#[test]
fn config_file_problem() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("mine.toml"),
        "base = \"tp3\"\nname = \"mine\"\nsigma = 0.5\nboundary = \"brownian_dirichlet\"\n[grid]\nT = 1.0\n",
    )
    .unwrap();
    let out = sgks(
        &["run", "--config", "mine.toml", "--I", "4", "--Itilde", "4", "--snapshots", "0.5,1"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = std::fs::read_to_string(dir.path().join("runs/mine/seed_0/solution.csv")).unwrap();
    assert!(sol.lines().any(|l| l.starts_with("1.000000,")));
}
