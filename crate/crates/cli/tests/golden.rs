//! Byte-for-byte comparisons of stdout against files in `tests/golden`.
//! Run with `UPDATE_GOLDEN=1` to rewrite them after an intended change.

use std::path::{Path, PathBuf};
use std::process::Command;

fn data(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(file).display().to_string()
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn compare(name: &str, actual: &[u8]) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    if expected != actual {
        panic!(
            "{name} differs from golden output\n--- expected\n{}\n--- actual\n{}",
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(actual)
        );
    }
}

fn golden(name: &str, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_hardybox")).args(args).output().unwrap();
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    compare(name, &out.stdout);
}

#[test]
fn check_pr_box() {
    golden("check_pr_box.json", &["check", &data("pr_box.json")]);
}

#[test]
fn check_mermin_example() {
    golden("check_mermin_example.json", &["check", "--input", &data("mermin_example.json")]);
}

#[test]
fn check_kwiat_hardy() {
    golden("check_kwiat_hardy.json", &["check", &data("kwiat_hardy.json")]);
}

#[test]
fn enumerate_text() {
    golden("enumerate.txt", &["enumerate"]);
}

#[test]
fn enumerate_json() {
    golden("enumerate.json", &["enumerate", "--json"]);
}

#[test]
fn complete_eq14() {
    golden(
        "complete_eq14.json",
        &["complete", "--variant", "eq14", "0.1", "0.2", "0.1", "0.2", "0.1", "0.2", "0.1", "0.2"],
    );
}

#[test]
fn examples_listing() {
    golden("examples.json", &["examples"]);
}

#[test]
fn quantum_max_default() {
    golden("quantum_max.json", &["quantum-max"]);
}

#[test]
fn tsirelson_max() {
    golden("tsirelson_max.json", &["tsirelson"]);
}

#[test]
fn simulate_round_robin() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("mermin_example.json");
    let out = Command::new(env!("CARGO_BIN_EXE_hardybox"))
        .current_dir(dir.path())
        .args(["simulate", "--input", &input, "--n", "400", "--seed", "9", "--policy", "roundrobin", "--alpha", "0.05"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    compare("simulate.json", &out.stdout);
    compare("simulate_trials.csv", &std::fs::read(dir.path().join("trials.csv")).unwrap());
}
