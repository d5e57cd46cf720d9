use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FG: &str = r#"{"dim":2,"kind":"finite","generators":[[1,2],[2,1],[1,1]]}"#;
const FG1: &str = r#"{"dim":1,"kind":"finite","generators":[[2],[3]]}"#;
const FAM: &str = r#"{"dim":2,"kind":"family","sequences":[{"c0":[1,0],"c1":[2,1],"n_start":1},{"c0":[0,1],"c1":[1,2],"n_start":1}]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastica"))
        .args(args)
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn file(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn elasticity_of_finite_spec() {
    let d = tempfile::tempdir().unwrap();
    let fg = file(d.path(), "fg.json", FG);
    let v = json(&["elasticity", "--spec", &fg]);
    assert_eq!(v["command"], "elasticity");
    assert_eq!(v["payload"]["value"], "3/2");
    assert_eq!(v["certificate"]["ratio"], "3/2");
}

#[test]
fn lengths_in_numerical_monoid() {
    let d = tempfile::tempdir().unwrap();
    let fg1 = file(d.path(), "fg1.json", FG1);
    let v = json(&["lengths", "--spec", &fg1, "--element", "12"]);
    assert_eq!(v["payload"]["lengths"], serde_json::json!([4, 5, 6]));
}

#[test]
fn classify_family_and_verify_certificate() {
    let d = tempfile::tempdir().unwrap();
    let fam = file(d.path(), "fam.json", FAM);
    let cert = d.path().join("cert.json").to_string_lossy().into_owned();
    let doc = d.path().join("doc.json").to_string_lossy().into_owned();
    let v = json(&["classify", "--spec", &fam, "--cert", &cert, "--out", &doc]);
    assert_eq!(v["payload"]["value"], "infinite");
    assert_eq!(v["certificate"]["ratio"], "43/4");
    for input in [&cert, &doc] {
        let r = json(&["verify", "--cert", input]);
        assert_eq!(r["payload"]["valid"], true);
        assert_eq!(r["payload"]["ratio"], "43/4");
    }
}

#[test]
fn tampered_certificate_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let fam = file(d.path(), "fam.json", FAM);
    let cert = d.path().join("cert.json").to_string_lossy().into_owned();
    json(&["certify", "--spec", &fam, "--cert", &cert]);
    let mut c: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    c["ratio"] = Value::from("100/1");
    let bad = file(d.path(), "bad.json", &c.to_string());
    let out = run(&["verify", "--cert", &bad]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let bad = file(d.path(), "bad.json", "{bad");
    let out = run(&["atoms", "--spec", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1 column 2"));

    let missing = d.path().join("nope.json").to_string_lossy().into_owned();
    assert_eq!(run(&["atoms", "--spec", &missing]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));

    let fg1 = file(d.path(), "fg1.json", FG1);
    let out = run(&[
        "lengths",
        "--spec",
        &fg1,
        "--element",
        "100000000000000000000",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn table_format() {
    let d = tempfile::tempdir().unwrap();
    let fg1 = file(d.path(), "fg1.json", FG1);
    let out = run(&[
        "lengths",
        "--spec",
        &fg1,
        "--element",
        "12",
        "--format",
        "table",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("payload.lengths"))
        .unwrap();
    assert!(line.ends_with("[4, 5, 6]"), "{line}");
}

#[test]
fn manifest_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let b = d.path().join("b.json").to_string_lossy().into_owned();
    let v = json(&["construct", "--count", "6", "--out", &b]);
    assert_eq!(v["payload"]["verification"]["verified"], true);
    let r = json(&["verify", "--spec", &b]);
    assert_eq!(r["command"], "verify");
    let p = json(&["primary", "--spec", &b]);
    assert_eq!(p["payload"]["primary"], true);
    let l = json(&["lift", "--spec", &b, "--dim", "3"]);
    assert_eq!(l["command"], "lift");
}

#[test]
fn realize_small_sets() {
    let v = json(&["realize", "--set", "2,3"]);
    assert_eq!(v["payload"]["generators"], serde_json::json!([2, 3]));
    assert_eq!(v["payload"]["element"], 6);
    let v = json(&["realize", "--set", "2,3,4,6"]);
    assert_eq!(v["payload"]["generators"], serde_json::json!([5, 11, 12, 14, 18]));
    let out = run(&["realize", "--set", "2,3,4,6", "--max-generator", "16"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn digest_depends_on_input() {
    let d = tempfile::tempdir().unwrap();
    let fg = file(d.path(), "fg.json", FG);
    let fg1 = file(d.path(), "fg1.json", FG1);
    let a = json(&["elasticity", "--spec", &fg]);
    let b = json(&["elasticity", "--spec", &fg1]);
    assert_ne!(a["input_digest"], b["input_digest"]);
    let c = json(&["elasticity", "--spec", &fg, "--threads", "1"]);
    assert_eq!(a["input_digest"], c["input_digest"]);
}
