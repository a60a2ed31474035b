use std::path::Path;
use std::process::{Command, Output};

const Z: &str = r#"{"kind":"integer_line"}"#;
const UP: &str = r#"{"rule":{"kind":"affine","a":1,"b":0},"step_bound":1}"#;
const UP3: &str = r#"{"rule":{"kind":"affine","a":1,"b":3},"step_bound":1}"#;
const DOWN: &str = r#"{"rule":{"kind":"affine","a":-1,"b":0},"step_bound":1}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_endslab"))
        .args(args)
        .env_remove("ENDSLAB_CAP")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn ends_of_the_line() {
    let o = run(&["ends", "--space", Z, "--rmax", "6"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["counts"], serde_json::json!([2, 2, 2, 2, 2, 2]));
    assert_eq!(v["class"], "finite(2)");
}

#[test]
fn eps_exit_codes() {
    let o = run(&["eps", "--space", Z, "--s", UP, "--t", UP3, "--rmax", "6"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"], "certificate");
    let o = run(&["eps", "--space", Z, "--s", UP, "--t", DOWN, "--rmax", "6"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["verdict"], "refutation");
}

#[test]
fn bad_input_and_caps() {
    assert_eq!(code(&run(&["ends", "--space", Z, "--bogus"])), 2);
    assert_eq!(code(&run(&["ends", "--space", r#"{"kind":"nowhere"}"#])), 2);
    assert_eq!(code(&run(&["ends", "--space", "/no/such/file.json"])), 2);
    let f2 = r#"{"kind":"free_group","rank":2}"#;
    let o = run(&["ball", "--space", f2, "--center", "ε", "--rmax", "9", "--cap", "1000"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn output_is_deterministic() {
    let args = ["threads", "--space", r#"{"kind":"comb_tree"}"#, "--rmax", "5", "--format", "dot"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("digraph"));
    let c = run(&["eps", "--space", Z, "--s", UP, "--t", UP3]);
    let d = run(&["eps", "--space", Z, "--s", UP, "--t", UP3]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn certificate_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let o = run(&["eps", "--space", Z, "--s", UP, "--t", UP3, "--rmax", "5", "--out", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let cert = cert.to_str().unwrap();
    assert_eq!(code(&run(&["eps", "--verify", cert])), 0);
    assert_eq!(code(&run(&["verify", "--certificate", cert])), 0);

    let w = run(&["witness", "--certificate", cert]);
    assert_eq!(code(&w), 0);
    let doc = json(&w);
    assert_eq!(doc["report"]["ok"], true);
    let wfile = write(dir.path(), "w.json", &doc["witness"].to_string());
    assert_eq!(code(&run(&["verify", "--witness", &wfile])), 0);
}

#[test]
fn corrupted_certificate_names_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eps", "--space", Z, "--s", UP, "--t", UP3, "--rmax", "5"]);
    let mut v = json(&o);
    v["entries"][3]["chain"]["points"][1] = serde_json::json!("-50");
    let path = write(dir.path(), "bad.json", &v.to_string());
    let o = run(&["verify", "--certificate", &path]);
    assert_eq!(code(&o), 1);
    let report = json(&o);
    assert_eq!(report["ok"], false);
    let failures = report["failures"].to_string();
    assert!(failures.contains("r = 3") || failures.contains("r=3"), "{failures}");
}

#[test]
fn tabular_formats() {
    let o = run(&["spaces", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).lines().count() > 1);
    let o = run(&["ends", "--space", Z, "--rmax", "3", "--format", "csv"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout), "r,count,classification\n1,2,finite(2)\n2,2,finite(2)\n3,2,finite(2)\n");
    assert_eq!(code(&run(&["eps", "--space", Z, "--s", UP, "--t", UP3, "--format", "dot"])), 2);
}

#[test]
fn map_commands() {
    let fold = r#"{"source":{"kind":"integer_line"},"target":{"kind":"integer_line"},"rule":{"kind":"absolute_value"}}"#;
    let square = r#"{"source":{"kind":"integer_line"},"target":{"kind":"integer_line"},"rule":{"kind":"polynomial","coeffs":[0,0,1]}}"#;
    assert_eq!(code(&run(&["map-check", "--map", fold])), 0);
    assert_eq!(code(&run(&["map-check", "--map", square])), 1);
    assert_eq!(code(&run(&["map-close", "--map", fold, "--other", square])), 1);
    let o = run(&["map-ends", "--map", fold, "--rmax", "4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["injective"], false);
}
