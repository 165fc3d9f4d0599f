use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ara_lab::scenario::{run_scenario, validate_scenario, Manifest, Pipeline, MANIFEST};

fn shipped() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    v
}

fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != MANIFEST)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn one_shipped_config_per_pipeline() {
    let mut seen: Vec<Pipeline> = shipped().iter().map(|p| validate_scenario(p).unwrap().pipeline).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen, Pipeline::ALL.to_vec());
}

#[test]
fn shipped_configs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cfg in shipped() {
        let ra = run_scenario(&cfg, a.path()).unwrap();
        let rb = run_scenario(&cfg, b.path()).unwrap();
        assert_eq!(contents(&ra.dir), contents(&rb.dir), "{}", cfg.display());
        let strip = |m: &Manifest| Manifest { created_unix_s: 0, ..m.clone() };
        assert_eq!(strip(&ra.manifest), strip(&rb.manifest));
        let on_disk: Manifest = serde_json::from_slice(&std::fs::read(ra.dir.join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(on_disk, ra.manifest);
        assert_eq!(on_disk.files.keys().cloned().collect::<Vec<_>>(), contents(&ra.dir).keys().cloned().collect::<Vec<_>>());
    }
}

#[test]
fn rerun_replaces_previous_results() {
    let root = tempfile::tempdir().unwrap();
    let cfg = shipped().into_iter().find(|p| p.ends_with("xhaul.toml")).unwrap();
    run_scenario(&cfg, root.path()).unwrap();
    std::fs::write(root.path().join("xhaul/stale.csv"), "x").unwrap();
    let r = run_scenario(&cfg, root.path()).unwrap();
    assert!(!r.dir.join("stale.csv").exists());
}

#[test]
fn xhaul_reports_both_anchors() {
    let root = tempfile::tempdir().unwrap();
    let cfg = shipped().into_iter().find(|p| p.ends_with("xhaul.toml")).unwrap();
    let r = run_scenario(&cfg, root.path()).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(r.dir.join("anchors.json")).unwrap()).unwrap();
    let tput = |i: usize| v[i]["throughput_bps"].as_f64().unwrap();
    assert!((tput(0) - 892e6).abs() <= 0.02 * 892e6);
    assert!((6.17e9..=6.96e9).contains(&tput(1)));
}

#[test]
fn capacity_has_anchor_distances() {
    let root = tempfile::tempdir().unwrap();
    let cfg = shipped().into_iter().find(|p| p.ends_with("capacity.toml")).unwrap();
    let r = run_scenario(&cfg, root.path()).unwrap();
    let text = std::fs::read_to_string(r.dir.join("capacity.csv")).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "distance_m");
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    let at = |d: &str, c: usize| -> f64 { rows.iter().find(|r| &r[0] == d).unwrap()[c].parse().unwrap() };
    assert!(at("500", col("AraMIMO-mm@128W")) >= 1.3e9);
    assert!((at("8600", col("AraMIMO-TVWS@10W")) - 120e6).abs() <= 15e6);
    assert!(at("1200", col("AraSDR@0.01W")) >= 25e6);
}
