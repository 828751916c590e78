use std::process::{Command, Output};

fn ramstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramstat"))
        .args(args)
        .output()
        .expect("spawn ramstat")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn ram_prints_one_record() {
    let out = ramstat(&["ram", "--quadratic-f", "0,1", "--n", "5"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("ram=1"), "{}", stdout(&out));

    let branch = ramstat(&["ram", "--quadratic-f", "-3,1", "--n", "3"]);
    assert!(branch.status.success());
    assert!(stdout(&branch).contains("ram=-1"));
}

#[test]
fn moments_csv_shape() {
    let out = ramstat(&["moments", "--quadratic-f", "0,1", "--N", "1000", "--k", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("N,k,statistic_name,value,gaussian_target,r,filter")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("1000,2,ram,"));
    assert!(rows[1].ends_with(",1,1,all"));
}

#[test]
fn json_output_parses() {
    let out = ramstat(&[
        "cdf",
        "--quadratic-f",
        "0,1",
        "--N",
        "500",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid json");
    assert!(doc["extras"]["ks_distance"].is_number());
    assert_eq!(doc["rows"].as_array().map(Vec::len), Some(13));
}

#[test]
fn usage_and_config_errors_exit_2() {
    for args in [
        &["moments", "--quadratic-f", "0,1", "--N", "2"][..],
        &["no-such-command"][..],
        &["moments", "--config", "/nonexistent/cfg.json"][..],
        &[
            "moments",
            "--quadratic-f",
            "0,1",
            "--N",
            "100",
            "--mode",
            "sideways",
        ][..],
    ] {
        let out = ramstat(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn run_writes_outputs_and_manifest() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-run");
    let _ = std::fs::remove_dir_all(&dir);
    let out = ramstat(&[
        "run",
        "--quadratic-f",
        "0,1",
        "--N",
        "2000",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["p0"], "2");
    assert!(dir.join("moments.csv").exists());
}

#[test]
fn selftest_catches_mutation() {
    let out = ramstat(&[
        "selftest",
        "--scale",
        "2000",
        "--mutate",
        "oracle-drop-3mod4",
    ]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("FAIL"));
}
