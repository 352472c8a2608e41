use std::path::Path;
use std::process::{Command, Output};

use omnisim::scenefile::PROTOTYPE_JSON;
use serde_json::Value;

fn omnisim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omnisim"))
        .args(args)
        .output()
        .unwrap()
}

fn write_scene(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(PROTOTYPE_JSON).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn exit_codes_and_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_scene(dir.path(), "good.json", |_| {});
    let bad_amp = write_scene(dir.path(), "amp.json", |v| {
        v["state_table"][0]["reflection"]["amp"] = 1.2.into()
    });
    let three = write_scene(dir.path(), "three.json", |v| {
        v["users"]
            .as_array_mut()
            .unwrap()
            .push(serde_json::json!([0.2, 0.3, 0.9]))
    });

    let cases: [(&[&str], i32, &str); 5] = [
        (&["simulate", "--config", &bad_amp], 2, "validation"),
        (
            &["simulate", "--config", "/nonexistent/scene.json"],
            2,
            "validation",
        ),
        (
            &["simulate", "--config", &good, "--no-such-flag"],
            2,
            "usage",
        ),
        (&["simulate", "--config", &three], 3, "numerical"),
        (
            &[
                "simulate",
                "--config",
                &good,
                "--optimizer",
                "exhaustive",
                "--granularity",
                "element",
            ],
            4,
            "guard",
        ),
    ];
    for (args, code, kind) in cases {
        let out = omnisim(args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        assert_eq!(error_kind(&out), kind, "{args:?}");
        assert!(out.stdout.is_empty());
    }
    let msg: Value =
        serde_json::from_slice(&omnisim(&["simulate", "--config", &bad_amp]).stderr).unwrap();
    assert!(msg["error"]["message"]
        .as_str()
        .unwrap()
        .contains("state_table[0].reflection.amp"));
}

#[test]
fn unknown_scene_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.json");
    let text = PROTOTYPE_JSON.replacen("\"frequency_hz\"", "\"frequncy_hz\"", 1);
    std::fs::write(&path, text).unwrap();
    let out = omnisim(&["linkbudget", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("line") && msg.contains("frequncy_hz"), "{msg}");
}

#[test]
fn simulate_report_has_group_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scene(dir.path(), "p.json", |_| {});
    let report = dir.path().join("r.json");
    let out = omnisim(&[
        "simulate",
        "--config",
        &cfg,
        "--granularity",
        "group",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["outcome"]["group_states"].as_array().unwrap().len(), 16);
    assert_eq!(
        v["outcome"]["element_states"].as_array().unwrap().len(),
        640
    );
    assert_eq!(v["outcome"]["per_user_rate"].as_array().unwrap().len(), 2);
    assert!(v.get("wall_time_s").is_none());

    // the report's configuration can drive a pattern sweep
    let out = omnisim(&[
        "pattern",
        "--config",
        &cfg,
        "--report",
        report.to_str().unwrap(),
        "--step-deg",
        "30",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("angle_deg,power_db,side"));
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
}

#[test]
fn coarse_pattern_step_yields_one_sample_per_side() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scene(dir.path(), "p.json", |_| {});
    let out = omnisim(&[
        "pattern",
        "--config",
        &cfg,
        "--side",
        "both",
        "--step-deg",
        "181",
        "--uniform-state",
        "0",
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "angle_deg,power_db,side\n0,0,reflection\n0,0,refraction\n"
    );
}

#[test]
fn coverage_writes_csv_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scene(dir.path(), "p.json", |_| {});
    let pgm = dir.path().join("m.pgm");
    let out = omnisim(&[
        "coverage",
        "--config",
        &cfg,
        "--grid",
        "-1,1,-1,1,5,3",
        "--uniform-state",
        "1",
        "--pgm",
        pgm.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 15);
    assert_eq!(
        csv.lines().filter(|l| l.ends_with(",nan,masked")).count(),
        5
    );
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n5 3\n255\n"));
    assert_eq!(bytes.len(), b"P5\n5 3\n255\n".len() + 15);
}

#[test]
fn linkbudget_matches_the_prototype() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scene(dir.path(), "p.json", |_| {});
    let out = omnisim(&["linkbudget", "--config", &cfg]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().last(), Some("received_dbm -55.99"));
    let out = omnisim(&["linkbudget", "--config", &cfg, "--ios-gain-db", "3"]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .ends_with("received_dbm -52.99\n"));
}

#[test]
fn help_exits_zero() {
    let out = omnisim(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("simulate"));
}
