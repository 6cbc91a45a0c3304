use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use transmute_lab::scenario::CheckInfo;

const FAST: &str = r#"
name = "fast"
seed = 5
checks = ["eigen", "kernel"]
[q1]
family = "zero"
[q2]
family = "constant"
c = 1.0
[grid]
x_max = 8.0
n_x = 512
k_max = 100.0
n_k = 512
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transmute-lab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fast.toml", FAST);
    let out = dir.path().join("out");
    let o = bin(&["run", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "PASS");
    assert!(out.join("kernel_goursat.csv").exists());
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "strict.toml", &format!("{FAST}\n[tolerances]\neigen-closed-form = 1e-14\n"));
    let o = bin(&["run", &cfg, "--out-dir", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL eigen-closed-form"));
}

#[test]
fn malformed_config_exits_two_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &FAST.replace("x_max = 8.0\n", ""));
    let o = bin(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x_max"));

    let cfg = write(dir.path(), "unsupported.toml", &FAST.replace("c = 1.0", "c = -1.0"));
    assert_eq!(bin(&["run", &cfg]).status.code(), Some(2));
    assert_eq!(bin(&["run", "/no/such/file.toml"]).status.code(), Some(2));
}

#[test]
fn checks_json_round_trips() {
    let o = bin(&["checks", "--format", "json"]);
    assert!(o.status.success());
    let cat: Vec<CheckInfo> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cat, transmute_lab::scenario::catalogue());
    let text = bin(&["checks"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("kernel-inversion"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fast.toml", FAST);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(bin(&["run", &cfg, "--out-dir", d.to_str().unwrap(), "--threads", "2"]).status.success());
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 3);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn export_writes_binary_operator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fast.toml", FAST);
    let o = bin(&[
        "export",
        "operator-bstar",
        "--scenario",
        &cfg,
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--format",
        "bin",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(dir.path().join("operator_bstar.bin")).unwrap();
    assert_eq!(&bytes[..4], b"TMUT");
    assert_eq!(bytes.len(), 16 + 8 * 512 * 512);
    assert_eq!(bin(&["export", "nothing", "--scenario", &cfg]).status.code(), Some(2));
}
