use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tiny_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/tiny")
}

fn depnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depnet"))
        .args(args)
        .env_remove("DEPNET_DATA")
        .env_remove("DEPNET_JOBS")
        .output()
        .expect("binary runs")
}

fn on_tiny(args: &[&str]) -> Output {
    let dir = tiny_dir();
    let mut all = vec!["--data", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    depnet(&all)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn impact_on_tiny() {
    let out = stdout(&on_tiny(&["index", "impact", "--p", "5", "--at", "2020-04-01"]));
    assert_eq!(out, "at,index_name,parameter,value\n2020-04-01T00:00:00Z,p_impact,5.0,3\n");
}

#[test]
fn growth_on_tiny() {
    let out = stdout(&on_tiny(&["series", "growth", "--from", "2020-02", "--to", "2020-04"]));
    assert_eq!(out, "month,packages,dependencies\n2020-02,3,0\n2020-03,4,2\n2020-04,5,4\n");
}

#[test]
fn snapshot_before_any_release_is_empty() {
    let out = stdout(&on_tiny(&["snapshot", "--at", "1900-01-01"]));
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("1900-01-01T00:00:00Z,0,0,0,0,0,0,0,"), "{row}");
}

#[test]
fn json_output() {
    let out = stdout(&on_tiny(&["--format", "json", "series", "ratio"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(
        v,
        serde_json::json!([
            {"month": "2020-02", "value": 0.0},
            {"month": "2020-03", "value": 0.5},
            {"month": "2020-04", "value": 0.8},
        ])
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(depnet(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(on_tiny(&["index", "impact", "--at", "2020-04-01", "--p", "0"]).status.code(), Some(2));
    assert_eq!(on_tiny(&["index", "impact", "--at", "2020-04-01", "--p", "101"]).status.code(), Some(2));
    assert_eq!(on_tiny(&["snapshot", "--at", "not-a-date"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_1() {
    let o = on_tiny(&["index", "impact", "--at", "2021-01-01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = depnet(&["--data", "/definitely/not/here", "validate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_and_version_succeed() {
    assert!(stdout(&depnet(&["--help"])).contains("Usage"));
    assert!(stdout(&depnet(&["--version"])).starts_with("depnet "));
}

#[test]
fn validate_tiny_is_clean() {
    let out = stdout(&on_tiny(&["validate"]));
    assert!(out.contains("count,packages,5"));
    assert!(!out.contains("ordering"));
}

#[test]
fn logrank_on_tiny() {
    let out = stdout(&on_tiny(&["survival", "--logrank", "--alpha", "0.05"]));
    assert!(out.starts_with("statistic,significant,alpha"));
    assert_eq!(on_tiny(&["survival", "--alpha", "0.2"]).status.code(), Some(2));
}

#[test]
fn dependents_gini_on_tiny() {
    let out = stdout(&on_tiny(&["inequality", "dependents", "--summary", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v[0]["gini"].as_f64().unwrap() - 2.0 / 12.0).abs() < 1e-12);
    assert!((v[0]["normalized_gini"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn generated_data_thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let data_s = data.to_str().unwrap();
    let gen = depnet(&[
        "fixture", "generate", "--packages", "400", "--months", "12", "--seed", "5", "--out", data_s,
    ]);
    assert!(gen.status.success());
    for args in [
        ["series", "transitive-ratio"].as_slice(),
        ["series", "index", "--index", "impact"].as_slice(),
        ["distribution", "deps"].as_slice(),
        ["survival", "--split-required"].as_slice(),
    ] {
        let run = |jobs: &str| {
            let mut all = vec!["--data", data_s, "--jobs", jobs];
            all.extend_from_slice(args);
            stdout(&depnet(&all))
        };
        assert_eq!(run("1"), run("4"), "{args:?}");
    }
}

#[test]
fn output_directory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    let manifest = dir.path().join("run.json");
    let o = on_tiny(&[
        "--out",
        out.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "series",
        "growth",
    ]);
    assert!(o.status.success());
    let written = out.join("growth__default.csv");
    assert!(std::fs::read_to_string(&written).unwrap().starts_with("month,packages,dependencies\n"));

    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["tool"], "depnet");
    assert_eq!(m["dataset"]["cutoff"], "2020-04-01T00:00:00Z");
    assert_eq!(m["dataset"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["metric"], "growth");
}

#[test]
fn tiny_fixture_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(depnet(&["fixture", "tiny", "--out", d]).status.success());
    let out = stdout(&depnet(&["--data", d, "index", "impact", "--at", "2020-04-01"]));
    assert!(out.ends_with(",p_impact,5.0,3\n"));
}
