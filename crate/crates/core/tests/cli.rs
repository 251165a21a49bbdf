use std::path::Path;
use std::process::{Command, Output};

fn polyvqc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyvqc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn synth_writes_balanced_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvqc(&["synth", "--seed", "7", "--out", "d/"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("d/features.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,x1,x2,label"));
    let labels: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.iter().filter(|l| **l == "1").count(), 67);
    assert_eq!(labels.iter().filter(|l| **l == "-1").count(), 67);
}

#[test]
fn missing_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvqc(&["train", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvqc(&["synth", "--seed", "1", "--out", "x", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn simulate_hom_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = polyvqc(&["simulate", "--circuit", &fixture("hom_circuit.json"), "--out", "sim"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim/distribution.json")).unwrap()).unwrap();
    let p11 = v["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["state"] == serde_json::json!([1, 1]))
        .unwrap()["probability"]
        .as_f64()
        .unwrap();
    assert!(p11.abs() < 1e-12);
}

#[test]
fn malformed_circuit_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"circuit": {"modes": 2}}"#).unwrap();
    let out = polyvqc(&["simulate", "--circuit", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn featurize_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("poly.csv"),
        "id,smiles,gap_ev\np1,C=CC1=CC=CC=C1,2.5\np2,Cc1ccsc1,1.2\np3,CC,0.3\n",
    )
    .unwrap();
    let out = polyvqc(&["featurize", "--input", "poly.csv", "--out", "enc"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let encoded = std::fs::read_to_string(d.join("enc/encoded.csv")).unwrap();
    assert_eq!(encoded.lines().count(), 3);
    assert!(encoded.lines().nth(1).unwrap().starts_with("p1,2.5,1,19,17,19,19,8,17,"));

    assert!(polyvqc(&["synth", "--seed", "3", "--out", "data", "--per-class", "20"], d).status.success());
    std::fs::write(
        d.join("run.toml"),
        "seed = 5\n[data]\nmode = \"precomputed_k2_augment\"\nfeatures = \"data/features.csv\"\n\
         [train]\niterations = 3\nrepeats = 1\nlambda_optimizer = \"ridge_closed_form\"\n",
    )
    .unwrap();
    let out = polyvqc(&["train", "--config", "run.toml", "--out", "run", "--threads", "2"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["data"]["total"], 40);

    let out = polyvqc(
        &["eval", "--model", "run/model.json", "--features", "data/features.csv", "--out", "ev"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ev: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("ev/eval.json")).unwrap()).unwrap();
    assert_eq!(ev["samples"], 40);
    let c = &ev["metrics"]["confusion"];
    let total: u64 = ["tp", "fp", "fn", "tn"].iter().map(|k| c[*k].as_u64().unwrap()).sum();
    assert_eq!(total, 40);

    // bad label in the features file
    std::fs::write(d.join("bad.csv"), "id,x1,x2,label\na,0.1,0.2,0\n").unwrap();
    let out = polyvqc(&["eval", "--model", "run/model.json", "--features", "bad.csv", "--out", "ev2"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}
