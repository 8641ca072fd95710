use std::fs;
use std::path::Path;
use std::process::Command;

fn hetnet(out: &Path, args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_hetnet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("HETNET_THREADS", "2")
        .output()
        .expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr),
    )
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn verify_passes_at_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = hetnet(dir.path(), &["--command", "verify", "--n", "200", "--seed", "3"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(v["checks"].as_array().unwrap().len() >= 6);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn verify_reports_failed_bound() {
    // Desk-scale density: the loaded-cell pass fraction exceeds its asymptotic bound.
    let dir = tempfile::tempdir().unwrap();
    let args = ["--command", "verify", "--n", "60", "--beta", "2.5", "--trials", "4", "--seed", "42"];
    let (code, out) = hetnet(dir.path(), &args);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("FAIL"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--command", "sweep", "--densities", "100,200"][..],
        &["--n", "-5"][..],
        &["--model", "mesh"][..],
        &["--beta", "0.5"][..],
    ] {
        let (code, out) = hetnet(dir.path(), args);
        assert_eq!(code, 2, "{args:?}: {out}");
    }
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 100, "bogus": 1}"#).unwrap();
    let (code, out) = hetnet(&dir.path().join("out"), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("bogus"));
}

#[test]
fn config_file_values_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 150, "model": "infrastructure", "seed": 4}"#).unwrap();
    let out = dir.path().join("out");
    let (code, log) = hetnet(&out, &["--config", cfg.to_str().unwrap(), "--n", "120"]);
    assert_eq!(code, 0, "{log}");
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["spec"]["config"]["n"], 120.0);
    assert_eq!(r["spec"]["config"]["model"], "Infrastructure");
    assert_eq!(r["spec"]["seed"], 4);
}

#[test]
fn simulate_twice_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--command", "simulate", "--n", "150", "--trials", "3", "--seed", "9", "--emit", "json,csv,pbm,slot-trace"];
    assert_eq!(hetnet(a.path(), &args).0, 0);
    assert_eq!(hetnet(b.path(), &args).0, 0);
    let (fa, fb) = (dir_contents(a.path()), dir_contents(b.path()));
    assert!(fa.len() >= 5);
    assert_eq!(fa, fb);
}

#[test]
fn deploy_writes_instance() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = hetnet(dir.path(), &["--command", "deploy", "--n", "100", "--model", "infrastructure", "--emit", "json,pbm"]);
    assert_eq!(code, 0, "{out}");
    let text = fs::read_to_string(dir.path().join("instance.json")).unwrap();
    let inst = hetnet::deployment::NetworkInstance::from_json(&text).unwrap();
    assert!(inst.bs_grid.is_some());
    let pbm = fs::read_to_string(dir.path().join("preservation.pbm")).unwrap();
    assert!(pbm.starts_with("P1\n"));
}

#[test]
fn sweep_writes_fit() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--command", "sweep", "--densities", "100,200,400", "--trials", "5", "--seed", "1"];
    let (code, out) = hetnet(dir.path(), &args);
    assert_eq!(code, 0, "{out}");
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert!(!fit["fits"].as_array().unwrap().is_empty());
    let rows = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 5);
}
