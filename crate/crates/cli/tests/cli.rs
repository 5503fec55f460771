use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asaireg")).args(args).output().expect("spawn asaireg")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("asaireg-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn snf_reports_kernel_and_condition() {
    let out = bin(&["snf"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["status"], "ok");
    let text = String::from_utf8(bin(&["snf", "--format", "text"]).stdout).unwrap();
    assert!(text.contains("condition number: 9"), "{text}");
    assert!(text.contains("(101090, 1, 172611, 21870, 0"), "{text}");
    assert!(text.trim_end().ends_with("status: Ok"));
}

#[test]
fn regulator_on_fixture_is_incomplete() {
    let out = bin(&["regulator", "--tail-bound", "10,55"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "incomplete_data");
    for route in ["TheoremB", "RegAE1"] {
        assert_eq!(v["body"]["routes"][route]["missing"]["norm_bound"], 9831, "{route}");
    }
    assert_eq!(v["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn bad_flags_exit_4() {
    for args in [&["--weight", "1,2", "snf"][..], &["--p", "4", "umatrix"], &["--D", "12", "pullback"]] {
        let out = bin(args);
        assert_eq!(out.status.code(), Some(4), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("cfg");
    let path = dir.join("run.toml");
    std::fs::write(&path, "n_matrix = 12\n").unwrap();
    let cfg = path.to_str().unwrap();
    let v = json(&bin(&["--config", cfg, "umatrix"]));
    assert_eq!(v["config"]["n_matrix"], 12);
    let v = json(&bin(&["--config", cfg, "--N", "14", "umatrix"]));
    assert_eq!(v["config"]["n_matrix"], 14);

    std::fs::write(&path, "no_such_key = 1\n").unwrap();
    assert_eq!(bin(&["--config", cfg, "umatrix"]).status.code(), Some(4));
    assert_eq!(bin(&["--config", dir.join("absent.toml").to_str().unwrap(), "umatrix"]).status.code(), Some(4));
}

#[test]
fn cache_is_transparent() {
    let dir = scratch("cache");
    let c = dir.to_str().unwrap();
    let cold = bin(&["--cache", c, "eisfunctional"]);
    let warm = bin(&["--cache", c, "eisfunctional"]);
    assert_eq!(cold.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&cold.stderr).contains("cache miss"));
    assert!(String::from_utf8_lossy(&warm.stderr).contains("cache hit"));
    assert_eq!(cold.stdout, warm.stdout);
    assert_eq!(cold.stdout, bin(&["eisfunctional"]).stdout);

    // a clobbered entry is recomputed, not trusted
    for e in std::fs::read_dir(&dir).unwrap() {
        std::fs::write(e.unwrap().path(), b"{ not json").unwrap();
    }
    let again = bin(&["--cache", c, "eisfunctional"]);
    assert!(String::from_utf8_lossy(&again.stderr).contains("corrupt"));
    assert_eq!(again.stdout, cold.stdout);
}

#[test]
fn incomplete_runs_are_not_cached() {
    let dir = scratch("nocache");
    let c = dir.to_str().unwrap();
    let a = bin(&["--cache", c, "regulator", "--route", "reg-ae1"]);
    assert_eq!(a.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 0);
}

#[test]
fn lvalues_text() {
    let out = bin(&["lvalues", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("zeta(-7) = 1/240"), "{text}");
}
