use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dronecell(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dronecell"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = dronecell(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

const SMALL: &[&str] = &["simulate", "--rings", "1", "--indoor", "40", "--outdoor", "40", "--aerial-per-height", "20"];

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        ok(d.path(), SMALL);
        ok(d.path(), &["train", "--model", "tree"]);
    }
    for f in ["dataset.csv", "radio_samples.csv", "model_tree.json", "metrics_tree.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let c = TempDir::new().unwrap();
    ok(c.path(), &[&["--seed", "9"], SMALL].concat());
    assert_ne!(read(a.path(), "dataset.csv"), read(c.path(), "dataset.csv"));
}

#[test]
fn default_run_has_both_labels() {
    let d = TempDir::new().unwrap();
    ok(d.path(), SMALL);
    let text = read(d.path(), "dataset.csv");
    assert!(text.lines().skip(1).any(|l| l.ends_with(",drone")));
    assert!(text.lines().skip(1).any(|l| l.ends_with(",terrestrial")));
    let m = json(d.path(), "simulate.manifest.json");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn zero_drops_give_header_only() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["simulate", "--indoor", "0", "--outdoor", "0", "--aerial-per-height", "0"]);
    assert_eq!(read(d.path(), "dataset.csv").trim(), "drop_index,ue_class,height_m,rssi_dbm,rsrp_std_db,label");
    // Training on it must fail cleanly, not panic.
    let out = dronecell(d.path(), &["train", "--model", "logistic"]);
    assert_eq!(out.status.code(), Some(3));
}

fn toy_dataset(dir: &Path, n: usize) -> std::path::PathBuf {
    let mut s = String::from("drop_index,ue_class,height_m,rssi_dbm,rsrp_std_db,label\n");
    for i in 0..n {
        let t = i as f64;
        if i % 2 == 0 {
            s += &format!("{i},aerial,100,{},{},drone\n", -40.0 + (t * 0.37) % 5.0, 2.0 + (t * 0.13) % 1.5);
        } else {
            s += &format!("{i},outdoor,1.5,{},{},terrestrial\n", -75.0 + (t * 0.41) % 9.0, 7.0 + (t * 0.29) % 4.0);
        }
    }
    let p = dir.join("toy.csv");
    std::fs::write(&p, s).unwrap();
    p
}

#[test]
fn separable_toy_is_learned_exactly() {
    let d = TempDir::new().unwrap();
    let toy = toy_dataset(d.path(), 120);
    let toy = toy.to_str().unwrap();
    for kind in ["logistic", "tree"] {
        ok(d.path(), &["train", "--dataset", toy, "--model", kind]);
        let m = json(d.path(), &format!("metrics_{kind}.json"));
        assert_eq!(m["test"]["accuracy"], 1.0, "{kind}");
        ok(d.path(), &["evaluate", "--dataset", toy, "--model", d.path().join(format!("model_{kind}.json")).to_str().unwrap()]);
        assert_eq!(json(d.path(), &format!("evaluation_{kind}.json"))["accuracy"], 1.0, "{kind}");
    }
}

#[test]
fn tree_matches_oracle_on_small_data() {
    let d = TempDir::new().unwrap();
    let toy = toy_dataset(d.path(), 40);
    let toy = toy.to_str().unwrap();
    ok(d.path(), &["train", "--dataset", toy, "--model", "tree", "--train-fraction", "1.0", "--max-depth", "3", "--min-leaf", "2"]);
    ok(d.path(), &["oracle-tree", "--dataset", toy, "--max-depth", "3", "--min-leaf", "2"]);
    assert_eq!(read(d.path(), "model_tree.json"), read(d.path(), "oracle_tree.json"));
}

#[test]
fn grid_covers_configured_axes() {
    let d = TempDir::new().unwrap();
    ok(d.path(), SMALL);
    ok(d.path(), &["train", "--model", "logistic"]);
    let model = d.path().join("model_logistic.json");
    ok(d.path(), &["grid", "--model", model.to_str().unwrap(), "--rsrp-std-steps", "5", "--rssi-steps", "4"]);
    assert_eq!(read(d.path(), "grid_logistic.csv").lines().count(), 1 + 20);

    let text = read(d.path(), "model_logistic.json").replace("\"format_version\": 1", "\"format_version\": 99");
    let bad = d.path().join("bad.json");
    std::fs::write(&bad, text).unwrap();
    let out = dronecell(d.path(), &["grid", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}

fn gate_code(dir: &Path, app: &str, kpis: &str) -> i32 {
    let p = dir.join("kpis.json");
    std::fs::write(&p, kpis).unwrap();
    dronecell(dir, &["gate", "--application", app, "--kpis", p.to_str().unwrap()]).status.code().unwrap()
}

#[test]
fn gate_exit_codes() {
    let d = TempDir::new().unwrap();
    let full = r#"{"uplink_rate_bps": 4e6, "e2e_latency_ms": 400, "network_latency_ms": 40,
                   "positioning_accuracy_m": 50, "max_reliable_height_m": 100}"#;
    assert_eq!(gate_code(d.path(), "1080p_transmission", full), 0);
    assert_eq!(json(d.path(), "gate_report.json")["verdict"], "pass");
    assert_eq!(gate_code(d.path(), "remote_real_time_control", r#"{"e2e_latency_ms": 250}"#), 1);
    assert_eq!(gate_code(d.path(), "1080p_transmission", "{}"), 2);
    assert_eq!(json(d.path(), "gate_report.json")["verdict"], "pass-with-gaps");
}

#[test]
fn gate_on_synthetic_trial() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["synth-trial"]);
    let log = d.path().join("trial_log.csv");
    let out = dronecell(d.path(), &["gate", "--application", "remote_real_time_control", "--trial", log.to_str().unwrap(), "--bin", "100"]);
    assert_eq!(out.status.code(), Some(1));
    ok(d.path(), &["trial", "--log", log.to_str().unwrap()]);
    let s = json(d.path(), "trial_summary.json");
    assert_eq!(s["bins"].as_array().unwrap().len(), 3);
}

#[test]
fn unknown_application_lists_names() {
    let d = TempDir::new().unwrap();
    let out = dronecell(d.path(), &["gate", "--application", "teleportation", "--kpis", "/dev/null"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("8k_video_inspection") && err.contains("farmland_mapping"), "{err}");
    let m = json(d.path(), "gate.manifest.json");
    assert_eq!(m["status"], "error");
    assert!(m["error"].as_str().unwrap().contains("teleportation"));
}

#[test]
fn usage_errors() {
    let d = TempDir::new().unwrap();
    assert_eq!(dronecell(d.path(), &["simulate", "--bogus"]).status.code(), Some(64));
    assert_eq!(dronecell(d.path(), &["train"]).status.code(), Some(64));
    assert_eq!(dronecell(d.path(), &["nonsense"]).status.code(), Some(64));
}

#[test]
fn invalid_config_names_field() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"ml": {"train_fraction": "most"}}"#).unwrap();
    let out = dronecell(d.path(), &["--config", cfg.to_str().unwrap(), "layout"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ml.train_fraction"));
    assert_eq!(json(d.path(), "layout.manifest.json")["status"], "error");
}

#[test]
fn help_for_every_subcommand() {
    let d = TempDir::new().unwrap();
    for sub in [
        "layout", "simulate", "train", "grid", "evaluate", "gate", "trial", "oracle-tree", "synth-trial", "rates",
    ] {
        let out = dronecell(d.path(), &[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub}");
    }
}

#[test]
fn rates_lookup() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["rates", "--fc-ghz", "3.5", "--radius-m", "300"]);
    assert!(read(d.path(), "rates.json").contains("200000000"));
    assert_eq!(dronecell(d.path(), &["rates", "--fc-ghz", "2.0", "--radius-m", "300"]).status.code(), Some(3));
}
