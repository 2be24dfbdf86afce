use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freqkey::stats::Verdict;
use freqkey_cli::summary::RunSummary;
use freqkey_cli::{EXIT_CONFIG, EXIT_OK, EXIT_REGIME};
use sha2::{Digest, Sha256};

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.json")
}

fn small_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(default_config()).unwrap()).unwrap();
    v["n_slots"] = 12_000.into();
    edit(&mut v);
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn freqkey(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freqkey"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("FREQKEY_OUT")
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> RunSummary {
    serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_artifacts_with_the_file_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let out = freqkey(&["simulate"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    let expected: String = Sha256::digest(std::fs::read(&cfg).unwrap()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(s.config_sha256, expected);
    assert_eq!(s.report.verdict, Verdict::Clean);
    assert_eq!(s.key_mismatches, 0);
    let text = std::fs::read_to_string(dir.path().join("transcript.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "slot,alice_choice,attack,lost,bob_setting,clicked,click_time_s,bit_alice,bit_bob,disclosed,in_key"
    );
    assert_eq!(lines.count(), 12_000);
}

#[test]
fn bad_probabilities_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |v| v["alice_probs"]["control"] = 0.2333333333333333.into());
    assert_eq!(freqkey(&["simulate"], &cfg, dir.path()).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn unknown_keys_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |v| v["detector"]["tua_det"] = 1e-9.into());
    assert_eq!(freqkey(&["simulate"], &cfg, dir.path()).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn slow_pump_exits_with_regime_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |v| v["source"]["tau_pi"] = 2e-10.into());
    assert_eq!(freqkey(&["simulate"], &cfg, dir.path()).status.code(), Some(EXIT_REGIME));
}

#[test]
fn attack_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let out = freqkey(&["attack", "--strategy", "intercept-freq"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(summary(dir.path()).report.verdict, Verdict::Eavesdropping);
    assert!(!dir.path().join("transcript.csv").exists());

    let out = freqkey(&["attack", "--strategy", "none"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(summary(dir.path()).report.verdict, Verdict::Clean);

    let out = freqkey(&["attack", "--strategy", "typo"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn overrides_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let env_out = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_freqkey"))
        .args(["simulate", "--seed", "77", "--alpha", "0.05", "--repeat", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("ignored"))
        .env("FREQKEY_OUT", &env_out)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(!dir.path().join("ignored").exists());
    for i in 0..3u64 {
        let s = summary(&env_out.join(format!("run-{i:04}")));
        assert_eq!(s.seed, 77 + i);
        assert_eq!(s.config.alpha, 0.05);
    }
}

#[test]
fn selftest_passes() {
    let out = Command::new(env!("CARGO_BIN_EXE_freqkey")).arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
