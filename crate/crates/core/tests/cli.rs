//! End-to-end CLI contract tests: exit codes, determinism, artifact files.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_effuniv"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("effuniv-cli-{tag}-{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_passes_and_appends_report() {
    let dir = workdir("verify");
    for _ in 0..2 {
        let out = bin()
            .args(["verify", "meansquare", "--trials", "20", "--seed", "3"])
            .arg("--json")
            .arg(&dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    // append-only: two identical runs leave two identical lines
    let report = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.file_name().to_string_lossy().starts_with("report-"))
        .expect("report file");
    let text = std::fs::read_to_string(report.path()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], lines[1], "same config + seed must be byte-identical");
    let parsed: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(parsed["schema"], 1);
    assert_eq!(parsed["summary"]["total"], parsed["summary"]["passed"]);
}

#[test]
fn unknown_lemma_is_usage_error() {
    let dir = workdir("unknown");
    let out = bin().args(["verify", "no-such-lemma"]).arg("--json").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_fails_with_exit_one() {
    let dir = workdir("badcfg");
    let cfg = dir.join("bad.toml");
    std::fs::write(
        &cfg,
        "q = 3\nr = 0.07\nR = 0.06\nbeta = 0.039\nepsilon = 1.0\nepsilon1 = 0.25\nrho = 8.0e6\nV = 50.0\n",
    )
    .unwrap();
    let out = bin()
        .args(["bound", "--config"])
        .arg(&cfg)
        .arg("--json")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "r > R must fail validation");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("r-lt-R") || stdout.contains("delta-domain"));
}

#[test]
fn scan_zero_width_is_empty_and_passes() {
    let dir = workdir("scan");
    let out = bin()
        .args(["scan", "--width", "0", "--t1", "100"])
        .arg("--json")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"hits\": 0"));
}

#[test]
fn strict_approximate_refuses_bad_hypotheses() {
    let dir = workdir("strict");
    let out = bin()
        .args(["approximate", "--strict", "--rho", "1000"])
        .arg("--json")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("rho-min"));
}
