use std::path::Path;
use std::process::{Command, Output};

use qtorus::cli::presets::preset;

fn qtorus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtorus")).args(args).output().expect("spawn qtorus")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn list_names_every_preset() {
    let out = qtorus(&["list"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["duffing", "henon-heiles", "harmonic-drift", "resonance-scan"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn duffing_preset_writes_artifacts_and_replays_from_summary() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = qtorus(&["preset", "duffing", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.toml", "history.csv", "summary.json", "trajectory.csv", "spectrum_r0.csv", "spectrum_r4.csv"] {
        assert!(first.join(f).exists(), "missing {f}");
    }
    let history = read(&first.join("history.csv"));
    assert!(history.starts_with("r,N_r,omega_1,residual_l2,step_l2,support_size,log_inverse_norm,gevrey_sup\n"), "{history}");
    let summary: serde_json::Value = serde_json::from_str(&read(&first.join("summary.json"))).unwrap();
    assert_eq!(summary["termination"]["reason"], "converged");

    let second = dir.path().join("second");
    let out = qtorus(&["run", first.join("summary.json").to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&second.join("history.csv")), history);

    let third = dir.path().join("third");
    let out = qtorus(&["run", first.join("config.toml").to_str().unwrap(), "--out", third.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(read(&third.join("history.csv")), history);
}

#[test]
fn max_iter_override_stops_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = qtorus(&["preset", "duffing", "--max-iter", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["termination"]["reason"], "max-iterations");
    assert_eq!(summary["iterations"].as_array().unwrap().len(), 2);
}

#[test]
fn strict_conditions_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = qtorus(&["preset", "henon-heiles", "--strict-conditions", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stdout));
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["trajectory_written"], false);
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qtorus(&["preset", "nope"])), 1);
    assert_eq!(code(&qtorus(&["frobnicate"])), 1);
    assert_eq!(code(&qtorus(&["--help"])), 0);
    assert_eq!(code(&qtorus(&["run", dir.path().join("missing.toml").to_str().unwrap()])), 1);

    let bad = dir.path().join("bad.toml");
    let text = read_preset_toml("duffing").replace("[solver]", "[solver]\nbogus = 3");
    std::fs::write(&bad, text).unwrap();
    let out = qtorus(&["run", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = qtorus(&["preset", "duffing", "--epsilon", "-1", "--out", dir.path().join("p").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

fn read_preset_toml(name: &str) -> String {
    preset(name).unwrap().to_toml_string().unwrap()
}

#[test]
fn drift_and_scan_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let drift = dir.path().join("drift");
    assert_eq!(code(&qtorus(&["preset", "harmonic-drift", "--out", drift.to_str().unwrap()])), 0);
    let table = read(&drift.join("drift.csv"));
    assert_eq!(table.lines().count(), 9);

    let mut cfg = preset("resonance-scan").unwrap();
    cfg.scan.as_mut().unwrap().samples = 500;
    let path = dir.path().join("scan.toml");
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    let scan = dir.path().join("scan");
    assert_eq!(code(&qtorus(&["run", path.to_str().unwrap(), "--out", scan.to_str().unwrap()])), 0);
    let first = read(&scan.join("resonance_scan.csv"));
    assert_eq!(first.lines().count(), 9);
    let again = dir.path().join("again");
    assert_eq!(code(&qtorus(&["run", path.to_str().unwrap(), "--out", again.to_str().unwrap()])), 0);
    assert_eq!(read(&again.join("resonance_scan.csv")), first);
}
