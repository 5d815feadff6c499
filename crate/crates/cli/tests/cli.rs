use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extsource")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn phase_reports_three_cut() {
    let out = run(&["phase", "--a", "2", "--t", "0.5", "--no-timestamp"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["result"]["phase"], "ThreeCut");
    assert_eq!(doc["config"]["a"], 2.0);
    assert!(doc.get("timestamp_unix").is_none());
}

#[test]
fn density_masses_in_json() {
    let out = run(&["density", "--a", "2", "--t", "0.4", "--points", "11", "--no-timestamp"]);
    assert!(out.status.success());
    let masses = json(&out)["result"]["masses"].clone();
    for (got, want) in masses.as_array().unwrap().iter().zip([0.3, 0.4, 0.3]) {
        assert!((got.as_f64().unwrap() - want).abs() < 1e-8);
    }
}

#[test]
fn verify_passes_at_twelve() {
    let out = run(&["verify", "--a", "2", "--t", "0.5", "--n", "12", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["passed"], true);
    assert!(doc["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(run(&["phase", "--t", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["support", "--a", "1.2"]).status.code(), Some(2));
    assert_eq!(run(&["phase", "--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.conf");
    fs::write(&file, "colour = blue\n").unwrap();
    assert_eq!(run(&["phase", "--config", file.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn refused_double_solve_names_the_failure() {
    let out = run(&["verify", "--n", "24", "--precision", "double", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ill-conditioned"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.conf");
    fs::write(&file, "# shared defaults\na = 2.5\nt = 0.3\nno-timestamp = true\n").unwrap();
    let doc = json(&run(&["phase", "--config", file.to_str().unwrap(), "--t", "0.6"]));
    assert_eq!(doc["config"]["a"], 2.5);
    assert_eq!(doc["config"]["t"], 0.6);
    assert!(doc.get("timestamp_unix").is_none());
}

#[test]
fn sample_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{k}"));
        let status = run(&[
            "sample", "--n", "24", "--draws", "6", "--seed", "5", "--threads", threads, "--no-timestamp", "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(status.status.success());
        let csv = fs::read_to_string(out_dir.join("sample.csv")).unwrap();
        let json = fs::read_to_string(out_dir.join("sample.json")).unwrap();
        let varying = [format!("\"threads\": {threads}"), format!("\"out\": {:?}", out_dir.to_str().unwrap())];
        let json = varying.iter().fold(json, |text, field| text.replace(field, ""));
        texts.push((csv, json));
    }
    assert_eq!(texts[0], texts[1]);
    let csv = &texts[0].0;
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("draw,stream,lambda_1"));
    let first = lines.next().unwrap().split(',').nth(2).unwrap().to_string();
    let mantissa = first.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.replace('.', "").len(), 17);
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn kernel_and_limits_emit_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let k = run(&["kernel", "--n", "6", "--grid", "-1,0,1", "--no-timestamp", "--out", out_dir]);
    assert!(k.status.success(), "{}", String::from_utf8_lossy(&k.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("kernel.csv")).unwrap().lines().count(), 10);

    let l = run(&["limits", "--sizes", "6,12", "--edge", "z3", "--no-timestamp", "--out", out_dir]);
    assert!(l.status.success(), "{}", String::from_utf8_lossy(&l.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("limits.json")).unwrap()).unwrap();
    assert_eq!(doc["result"]["bulk"].as_array().unwrap().len(), 2);
    assert_eq!(doc["result"]["edge"][0]["point"]["edge"], "Z3");
    assert!(fs::read_to_string(dir.path().join("limits.csv")).unwrap().starts_with("check,n,u,v"));
}
