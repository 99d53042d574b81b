use std::path::Path;
use std::process::{Command, Output};

use bocda::fiber::{Channel, FiberSegment};
use bocda::forward::{ScanConfig, Sweep};
use serde_json::Value;

fn bocda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bocda")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

/// Short homogeneous channel and a matching small scan written to `dir`.
fn inputs(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let wl = 1.55e-6;
    let ch = Channel::new(wl, vec![FiberSegment::smf28(1.0)]);
    let b0 = FiberSegment::smf28(1.0).bfs(wl).unwrap();
    let mut scan = ScanConfig::with_positions(Sweep::new(0.2, 0.8, 0.005), Sweep::new(b0 - 50e6, b0 + 50e6, 0.5e6));
    scan.seed = 3;
    let (cp, sp) = (dir.join("channel.toml"), dir.join("scan.toml"));
    std::fs::write(&cp, ch.to_toml_string()).unwrap();
    std::fs::write(&sp, scan.to_toml_string()).unwrap();
    (cp, sp)
}

#[test]
fn simulate_then_analyze_clean_channel() {
    let tmp = tempfile::tempdir().unwrap();
    let (cp, sp) = inputs(tmp.path());
    let sim = tmp.path().join("sim");
    let out = bocda(&["simulate", "--channel", p(&cp), "--scan", p(&sp), "--out", p(&sim)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["sonogram.txt", "sonogram.meta.json", "channel.toml"] {
        assert!(sim.join(f).exists(), "{f}");
    }

    let an = tmp.path().join("an");
    let son = sim.join("sonogram.txt");
    let out = bocda(&["analyze", "--channel", p(&cp), "--sonogram", p(&son), "--out", p(&an)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(an.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["format"], "bocda-report/1");
    assert_eq!(report["events"].as_array().unwrap().len(), 0, "{report}");
}

#[test]
fn seed_flag_changes_noise_and_repeats_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let (cp, sp) = inputs(tmp.path());
    let mut texts = Vec::new();
    for (k, seed) in ["7", "7", "8"].iter().enumerate() {
        let dir = tmp.path().join(format!("s{k}"));
        let out = bocda(&["simulate", "--channel", p(&cp), "--scan", p(&sp), "--seed", seed, "--out", p(&dir)]);
        assert!(out.status.success());
        texts.push(std::fs::read(dir.join("sonogram.txt")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_ne!(texts[0], texts[2]);
}

#[test]
fn foreign_sonogram_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let (cp, sp) = inputs(tmp.path());
    let sim = tmp.path().join("sim");
    assert!(bocda(&["simulate", "--channel", p(&cp), "--scan", p(&sp), "--out", p(&sim)]).status.success());

    let other = tmp.path().join("other.toml");
    let ch = Channel::new(1.55e-6, vec![FiberSegment::smf28(1.0)]).with_feature(bocda::Feature::splice(0.5));
    std::fs::write(&other, ch.to_toml_string()).unwrap();
    let son = sim.join("sonogram.txt");
    let an = tmp.path().join("an");
    let out = bocda(&["analyze", "--channel", p(&other), "--sonogram", p(&son), "--out", p(&an)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "digest_mismatch");
    assert!(!an.join("report.json").exists());

    let out = bocda(&["analyze", "--channel", p(&other), "--sonogram", p(&son), "--ignore-digest", "--out", p(&an)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_channel_lists_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let (cp, sp) = inputs(tmp.path());
    let bad = std::fs::read_to_string(&cp).unwrap().replace("n_eff = 1.4682", "n_eff = 2.5");
    std::fs::write(&cp, bad).unwrap();
    let out = bocda(&["simulate", "--channel", p(&cp), "--scan", p(&sp), "--out", p(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "invalid_channel");
    assert!(!err["violations"].as_array().unwrap().is_empty());
}

#[test]
fn overrides_apply_and_unknown_keys_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let (cp, sp) = inputs(tmp.path());
    let dir = tmp.path().join("quiet");
    let out = bocda(&[
        "simulate",
        "--channel",
        p(&cp),
        "--scan",
        p(&sp),
        "--set",
        "scan.noise.enabled=false",
        "--out",
        p(&dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("sonogram.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["noise_applied"], false);

    let out =
        bocda(&["simulate", "--channel", p(&cp), "--scan", p(&sp), "--set", "scan.no_such_field=1", "--out", p(&dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "unknown_key");
}

#[test]
fn bad_arguments_exit_with_usage_error() {
    assert_eq!(bocda(&["reproduce-figure", "9"]).status.code(), Some(2));
    assert_eq!(bocda(&["simulate"]).status.code(), Some(2));
}

#[test]
fn fingerprint_figure_labels_each_patchcord() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("fig4b");
    let out = bocda(&["reproduce-figure", "4b", "--out", p(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for label in ["Thorlabs", "Newport", "Opneti"] {
        let table = std::fs::read_to_string(out_dir.join(label).join("fingerprint.csv")).unwrap();
        let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 1, "{table}");
        assert!(rows[0].ends_with(&format!(",{label}")), "{table}");
    }
    assert!(out_dir.join("summary.json").exists());
}
