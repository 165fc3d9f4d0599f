use std::path::Path;
use std::process::{Command, Output};

fn ara(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ara-lab"))
        .args(args)
        .env("ARA_LAB_STATE", dir.join("state"))
        .env("ARA_LAB_OUT", dir.join("out"))
        .output()
        .unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(line: &str) -> serde_json::Value {
    serde_json::from_str(line).unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).to_string_lossy().into_owned()
}

#[test]
fn validate_and_run_shipped_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario("xhaul.toml");
    assert!(ok(&ara(tmp.path(), &["validate", &cfg])).starts_with("xhaul: ok (xhaul_weather, seed 4)"));
    ok(&ara(tmp.path(), &["run", &cfg]));
    let dir = tmp.path().join("out/xhaul");
    assert!(dir.join("manifest.json").exists() && dir.join("anchors.json").exists());
}

#[test]
fn refuses_foreign_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out/xhaul");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("notes.txt"), "keep").unwrap();
    let o = ara(tmp.path(), &["run", &scenario("xhaul.toml")]);
    assert!(!o.status.success());
    assert_eq!(std::fs::read_to_string(dir.join("notes.txt")).unwrap(), "keep");
}

#[test]
fn bad_config_reports_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("x.toml");
    std::fs::write(&cfg, "name = \"x\"\npipeline = \"nope\"\nseed = 1\n").unwrap();
    let o = ara(tmp.path(), &["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn lease_launch_and_guard_persist_across_invocations() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let req = |who: &str| {
        ara(
            d,
            &[
                "lease", "request", "--requester", who, "--resource", "wilson-hall:AraMIMO-C", "--start", "0", "--end",
                "600", "--spectrum", "3.45e9:3.55e9:30", "--now", "0",
            ],
        )
    };
    let lease = json(ok(&req("alice")).trim());
    let id = lease["id"].as_u64().unwrap().to_string();
    let second = req("bob");
    assert!(!second.status.success());
    assert!(String::from_utf8_lossy(&second.stderr).contains("conflict"));
    assert_eq!(ok(&ara(d, &["lease", "list"])).lines().count(), 1);

    let emissions = d.join("em.json");
    std::fs::write(
        &emissions,
        r#"[{"resource":{"site":"wilson-hall","device":"AraMIMO-C"},"from_s":150.0,"to_s":300.0,
            "freq_low_hz":3.46e9,"freq_high_hz":3.5e9,"power_dbm":40.0}]"#,
    )
    .unwrap();
    let exp = json(
        ok(&ara(
            d,
            &["exp", "launch", "--lease", &id, "--image-bytes", "1000000000", "--workload", "w", "--emissions", emissions.to_str().unwrap(), "--now", "10"],
        ))
        .trim(),
    );
    let exp_id = exp["id"].as_u64().unwrap().to_string();
    let status = json(ok(&ara(d, &["exp", "status", &exp_id, "--at", "120"])).trim());
    assert_eq!(status["state"], "running");

    let events: Vec<serde_json::Value> = ok(&ara(d, &["guard", "audit", "--until-slot", "200"])).lines().map(json).collect();
    assert!(events.iter().any(|e| e["kind"] == "over_power"));
    let status = json(ok(&ara(d, &["exp", "status", &exp_id, "--at", "200"])).trim());
    assert_eq!(status["state"], "revoked");
}
