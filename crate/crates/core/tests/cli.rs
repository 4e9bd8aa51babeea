use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_quintic-lab"));
    c.env_remove("QUINTIC_LAB_OUTPUT");
    c
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
}

#[test]
fn help_succeeds() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn counting_run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--seed", "3", "--output-dir"])
        .arg(dir.path())
        .args(["counting", "--family", "sphere", "--max-r2", "300"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("counting.json");
    let art = json(&report);
    assert_eq!(art["command"], "counting");
    assert_eq!(art["config"]["seed"], 3);
    assert!(art["report"].is_object() || art["report"].is_array());

    let out = bin().arg("plot").arg(&report).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "counting reports have no plot series");
}

#[test]
fn config_file_drives_a_run_and_bad_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let doc = serde_json::json!({
        "output_dir": dir.path(),
        "command": {"estimates": {"list": true}}
    });
    std::fs::write(&cfg, doc.to_string()).unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(&cfg, r#"{"command": {"counting": {"bogus": 1}}}"#).unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("error is JSON");
    assert!(err.is_object());
}

#[test]
fn estimate_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("--output-dir")
        .arg(dir.path())
        .args(["estimates", "--id", "DRD", "--seeds", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .expect("csv written");
    let text = std::fs::read_to_string(csv.path()).unwrap();
    assert!(text.starts_with("estimate_id,n1,n2,n3,seed,lhs,rhs,ratio"));
    assert!(text.lines().count() > 1);

    let out = bin().arg("plot").arg(dir.path().join("estimates-DRD.json")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let series = std::fs::read_to_string(dir.path().join("DRD.series.tsv")).unwrap();
    assert!(series.starts_with("# log2_N"));
    assert_eq!(series.lines().count(), 5);
}
