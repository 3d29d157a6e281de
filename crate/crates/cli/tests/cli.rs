//! End-to-end runs of the `erlab` binary.

use std::path::Path;
use std::process::{Command, Output};

fn small_config(preset: &str, extra: &str) -> String {
    format!(
        r#"
[scenario]
preset = "{preset}"

[dictionary]
kind = "histogram"
size = 8

[plan]
n = 512
M = 200
R = 40
seed = 99
check_trials = 20
margin_samples = 500
{extra}
[plan.s_grid]
points = 40
"#
    )
}

fn erlab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erlab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("ERLAB_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn noiseless_concentration_has_empty_tails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config("noiseless_centered", ""));
    let out = dir.path().join("out");
    let o = erlab(&["concentration"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let tails = std::fs::read_to_string(out.join("tails.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(tails.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "exceedances").unwrap();
    for r in rows.records() {
        assert_eq!(&r.unwrap()[col], "0");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["command"], "concentration");
}

#[test]
fn zero_trials_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config("default", "").replace("M = 200", "M = 0"));
    let o = erlab(&["concentration"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("plan.M"));
}

#[test]
fn unreadable_or_malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = erlab(&["describe"], &dir.path().join("missing.toml"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let cfg = write(dir.path(), "bad.toml", &small_config("default", "colour = 1\n"));
    let o = erlab(&["describe"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config("default", ""));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = erlab(&["tails"], &cfg, out);
        assert!(o.status.code().is_some_and(|c| c <= 1));
    }
    for name in ["report.json", "curves.csv", "tails.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn describe_prints_derived_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config("default", ""));
    let o = erlab(&["describe"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line[key.len()..].trim().parse().unwrap()
    };
    assert_eq!(value("K "), 6.0);
    assert_eq!(value("C "), 6.0);
    // The inscribed L2 radius of the histogram box is its half-width r/√D.
    assert!((value("s_box") - 8f64.sqrt().recip()).abs() < 1e-12);
    // No files are written.
    assert!(std::fs::read_dir(dir.path()).unwrap().count() == 1);
}

#[test]
fn describe_flags_an_oversized_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config("default", "").replace("size = 8", "size = 100").replace("n = 512", "n = 1000000");
    let cfg = write(dir.path(), "c.toml", &text);
    let o = erlab(&["describe"], &cfg, dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    let regime: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("regime")).skip(1).collect();
    assert!(regime[0].trim_start().starts_with("fail"), "{text}");
}

#[test]
fn json_configs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let toml_cfg = erlab::config::ExperimentConfig::from_toml(&small_config("default", "")).unwrap();
    let cfg = write(dir.path(), "c.json", &serde_json::to_string_pretty(&toml_cfg).unwrap());
    let out = dir.path().join("out");
    let o = erlab(&["margin"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("report.json").exists());
}
