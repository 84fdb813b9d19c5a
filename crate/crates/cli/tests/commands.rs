use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_expofield")).args(args).output().expect("run cli");
    let code = out.status.code().expect("exit code");
    let stdout = String::from_utf8(out.stdout).expect("utf-8");
    let value = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (code, value, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn normalize_counts_aliases() {
    let (code, v, _) = run(&["normalize", "-e", "E(E(x))=x"]);
    assert_eq!(code, 0);
    assert_eq!(v["aux_count"], 1);
    assert_eq!(v["xvars"].as_array().unwrap().len(), 2);
}

#[test]
fn tp2_instance_is_free() {
    let (code, v, _) = run(&["tp2", "-n", "2", "-J", "3", "--sigma", "2,3"]);
    assert_eq!(code, 0);
    assert_eq!(v["freeness"], "free");
    assert_eq!(v["arguments_independent"], true);
}

#[test]
fn not_free_variety_exits_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "notfree.json",
        r#"{"base_params":[],"locus_params":["u"],"X":["u","2*u + 3"],"Y":["u","u"]}"#,
    );
    let (code, v, _) = run(&["free-check", "-f", &f]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "not_additively_free");
    let rel = &v["certificate"]["relation"];
    assert_eq!(rel["m"], serde_json::json!(["-2", "1"]));
    assert_eq!(rel["a"], "3");
}

#[test]
fn usage_and_io_errors_exit_one() {
    assert_eq!(run(&["bogus"]).0, 1);
    assert_eq!(run(&["free-check", "-f", "/nonexistent/variety.json"]).0, 1);
    assert_eq!(run(&["normalize"]).0, 1);
}

#[test]
fn schema_errors_point_into_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "zero.json",
        r#"{"name":"F","cyclotomic_order":1,"transcendentals":["t"],"egraph":[{"arg":"t","val":"0"}]}"#,
    );
    let (code, v, _) = run(&["roundtrip", &f]);
    assert_eq!(code, 2);
    assert_eq!(v["certificate"]["pointer"], "/egraph/0/val");
}

#[test]
fn roundtrip_of_canonical_output_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tp2.json");
    let (code, _, _) = run(&["tp2", "-n", "1", "-J", "2", "--sigma", "1", "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, v, _) = run(&["roundtrip", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["identical_bytes"], true);
}

#[test]
fn solve_realizes_a_system() {
    let (code, v, _) = run(&["solve", "-e", "E(x) = 2 & x != 0"]);
    assert_eq!(code, 0);
    assert!(v["d"].as_array().is_some_and(|d| !d.is_empty()));
}
