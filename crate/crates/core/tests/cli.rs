use phonon_counting::config::ExperimentConfig;
use phonon_counting::detection::read_timetags;
use phonon_counting::provenance::to_hex;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SHORT: &str = r#"{"seed": 13, "sim": {"duration_s": 0.0002}}"#;

fn phonocount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phonocount")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"system": {"gzero_hz": 1}}"#);
    let o = phonocount(&["nep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("system.gzero_hz"), "{}", stderr(&o));
}

#[test]
fn inconsistent_parameters_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        r#"{"system": {"kappa_e_hz": 9e8}}"#,
        r#"{"drive": {"n_c": 100, "power_w": 1e-3}}"#,
        r#"{"detection": {"eta_total": 0.9}}"#,
        "{ not json",
    ] {
        let cfg = write_config(dir.path(), text);
        let o = phonocount(&["g2", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
}

#[test]
fn zero_duration_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"sim": {"duration_s": 0}}"#);
    let o = phonocount(&["g2", "--config", &cfg, "--out", dir.path().join("g2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn outputs_carry_hash_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let out = dir.path().join("events");
    let o = phonocount(&["events", "--config", &cfg, "--seed", "17", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let resolved = fs::read_to_string(out.join("resolved_config.json")).unwrap();
    let config = ExperimentConfig::from_json(&resolved).unwrap();
    assert_eq!(config.seed, 17);
    let hash = to_hex(&config.hash());

    let stream = read_timetags(fs::File::open(out.join("events.phct")).unwrap()).unwrap();
    assert_eq!(stream.meta.seed, Some(17));
    assert_eq!(to_hex(&stream.meta.params_hash), hash);
    assert!(!stream.is_empty());

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("events.json")).unwrap()).unwrap();
    assert_eq!(report["config_hash"], hash.as_str());
    assert_eq!(report["events"], stream.len());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let first = dir.path().join("first");
    let o = phonocount(&["g2", "--config", &cfg, "--nc", "900", "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let second = dir.path().join("second");
    let resolved = first.join("resolved_config.json");
    let o = phonocount(&["g2", "--config", resolved.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["resolved_config.json", "g2.csv", "summary.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(first.join("g2.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="), "{}", &csv[..80]);
}

#[test]
fn sweep_accepts_a_photon_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let out = dir.path().join("sweep");
    let o = phonocount(&["sweep", "--config", &cfg, "--nc", "300,600", "--side", "red", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rows = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(out.join("sweep.csv")).unwrap();
    let n_c: Vec<f64> = rows.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(n_c, vec![300.0, 600.0]);
    assert!(out.join("point_001").join("summary.json").exists());
}
