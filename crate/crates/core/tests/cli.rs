mod common;

use std::process::Command;

use common::fixture;

fn newsgallery(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_newsgallery"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn metrics_prints_bundled_figures() {
    let out = newsgallery(&["metrics"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["relatedEvents"], 69);
    assert_eq!(v["ratedGalleries"], 253);
    assert!((v["recall"].as_f64().unwrap() - 48.0 / 69.0).abs() < 1e-12);
}

#[test]
fn detect_prints_one_event_per_line() {
    let replay = fixture("replay/pipeline.replay");
    let config = fixture("pipeline.toml");
    let out = newsgallery(&[
        "detect",
        "--replay",
        replay.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["eventId"], "de:Dario Cologna#1");
}

#[test]
fn run_archives_a_gallery_pair_per_event() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = newsgallery(&[
        "run",
        "--config",
        fixture("pipeline.toml").to_str().unwrap(),
        "--replay",
        fixture("replay/pipeline.replay").to_str().unwrap(),
        "--archive-dir",
        dir.path().join("archive").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("galleries=4"));
    let mut files = Vec::new();
    for day in std::fs::read_dir(dir.path().join("archive")).unwrap() {
        for f in std::fs::read_dir(day.unwrap().path()).unwrap() {
            files.push(f.unwrap().path());
        }
    }
    assert_eq!(files.len(), 8);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["galleries"], 4);
}

#[test]
fn layout_prints_gallery() {
    let items = fixture("listing1/items.json");
    let out = newsgallery(&[
        "layout",
        "--items",
        items.to_str().unwrap(),
        "--kind",
        "strict",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
}

#[test]
fn bad_config_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "top_k = 0\n").unwrap();
    let out = newsgallery(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--replay",
        "x.replay",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_replay_exits_with_2() {
    let out = newsgallery(&["detect", "--replay", "/nonexistent/none.replay"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_without_source_exits_with_1() {
    let out = newsgallery(&[
        "run",
        "--config",
        fixture("pipeline.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
