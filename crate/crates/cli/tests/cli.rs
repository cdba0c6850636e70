use std::path::Path;
use std::process::Command;

fn grtlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_grtlab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn selftest_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{}");
    let out = dir.path().join("out");
    let o = grtlab(&["selftest", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["pass"], true);
    assert_eq!(report["mode"], "selftest");
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"selftest": {"perturb_adjoint": true}}"#);
    let out = dir.path().join("out");
    let o = grtlab(&["selftest", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL adjoint"));
    assert!(out.join("report.json").exists());
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"kappa": -1}"#);
    assert_eq!(grtlab(&["theory", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(grtlab(&["theory", "--config", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"trials": 50, "coarse": {"n_alpha": 30, "n_rho": 46}, "fine": {"n_alpha": 60, "n_rho": 91},
            "recon_n": 33, "impulse_index": [10, 22]}"#,
    );
    let out = dir.path().join("out");
    let o = grtlab(&["montecarlo", "--config", &cfg, "--trials", "12", "--seed", "3", "--out", out.to_str().unwrap()]);
    // too few trials for the chi-square binning, so the run itself fails
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["trials"], 12);
    assert_eq!(report["config"]["noise"]["seed"], 3);
    assert_eq!(std::fs::read_to_string(out.join("samples.csv")).unwrap().lines().count(), 13);
}
