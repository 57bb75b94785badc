use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_starslam"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../sim/scenarios").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("starslam-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn validate_accepts_bundled_scenarios() {
    for name in ["sim1.json", "sim2.json"] {
        let out = bin().arg("validate").arg(scenario(name)).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
    }
}

#[test]
fn validate_reports_field_path() {
    let dir = scratch("bad");
    let text = std::fs::read_to_string(scenario("sim1.json")).unwrap();
    let bad = text.replacen("\"dt\": 0.2", "\"dt\": -1.0", 1);
    assert_ne!(bad, text);
    let path = dir.join("bad.json");
    std::fs::write(&path, bad).unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dt`"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn run_then_report_reproduces_outputs() {
    let dir = scratch("run");
    // a short variant keeps the test quick
    let text = std::fs::read_to_string(scenario("sim1.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["trajectory"]["segments"].as_array_mut().unwrap().truncate(2);
    let cfg = dir.join("short.json");
    std::fs::write(&cfg, v.to_string()).unwrap();

    let out = bin().args(["run", cfg.to_str().unwrap(), "--seed", "5", "--out", dir.join("a").to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["runlog.ndjson", "steps.csv", "summary.csv", "snapshots"] {
        assert!(dir.join("a").join(f).exists(), "{f}");
    }
    let summary = std::fs::read(dir.join("a/summary.csv")).unwrap();
    let out = bin()
        .args(["report", dir.join("a/runlog.ndjson").to_str().unwrap(), "--out", dir.join("b").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(dir.join("b/summary.csv")).unwrap(), summary);
    assert_eq!(std::fs::read(dir.join("b/steps.csv")).unwrap(), std::fs::read(dir.join("a/steps.csv")).unwrap());

    let again = bin().args(["run", cfg.to_str().unwrap(), "--seed", "5", "--out", dir.join("c").to_str().unwrap()]).output().unwrap();
    assert!(again.status.success());
    assert_eq!(
        std::fs::read(dir.join("c/runlog.ndjson")).unwrap(),
        std::fs::read(dir.join("a/runlog.ndjson")).unwrap()
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_file_fails_cleanly() {
    let out = bin().args(["report", "/nonexistent/runlog.ndjson"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
