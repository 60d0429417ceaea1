mod common;

use std::path::Path;

use common::fixture;
use newsgallery_core::edit_stream::ReplaySource;
use newsgallery_core::layout::GalleryKind;
use newsgallery_core::pipeline::{
    EventStatus, GalleryRecord, JsonLinesPublisher, NullPublisher, Pipeline, PipelineConfig,
    RunReport,
};
use newsgallery_core::Error;

fn config(archive: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixture("pipeline.toml")).unwrap();
    cfg.archive_dir = archive.to_path_buf();
    cfg
}

fn run(
    cfg: PipelineConfig,
    replay: &str,
    publisher: &mut dyn newsgallery_core::pipeline::Publisher,
) -> RunReport {
    let source = ReplaySource::open(fixture(&format!("replay/{replay}.replay"))).unwrap();
    Pipeline::from_config(cfg)
        .unwrap()
        .run(source, publisher)
        .unwrap()
}

#[test]
fn records_are_published_in_detection_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut records: Vec<GalleryRecord> = Vec::new();
    let report = run(config(dir.path()), "pipeline", &mut records);
    assert_eq!(report.records_read, 11);
    assert_eq!(report.malformed_records, 0);
    assert_eq!(
        (report.events, report.unique_events, report.illustrated),
        (2, 2, 2)
    );
    assert!(report.pair_contract_holds());
    assert_eq!(records.len(), report.galleries);
    let ids: Vec<&str> = records.iter().map(|r| r.event_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "de:Dario Cologna#1",
            "de:Dario Cologna#1",
            "de:Ireen Wüst#1",
            "de:Ireen Wüst#1"
        ]
    );
    let kinds: Vec<GalleryKind> = records.iter().map(|r| r.kind).collect();
    assert_eq!(kinds[0], kinds[2]);
    assert_ne!(kinds[0], kinds[1]);
    assert!(records
        .windows(2)
        .all(|w| w[0].detected_at <= w[1].detected_at));
}

#[test]
fn archive_paths_are_dated_and_exist() {
    let dir = tempfile::tempdir().unwrap();
    let mut records: Vec<GalleryRecord> = Vec::new();
    run(config(dir.path()), "pipeline", &mut records);
    for r in &records {
        let day = chrono::DateTime::from_timestamp(r.detected_at, 0)
            .unwrap()
            .format("%Y-%m-%d")
            .to_string();
        assert!(
            r.archive_path.starts_with(&format!("{day}/")),
            "{}",
            r.archive_path
        );
        assert!(r.archive_path.ends_with(".png"));
        assert!(r.html_path.ends_with(".html"));
        let png = std::fs::read(dir.path().join(&r.archive_path)).unwrap();
        assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
        assert!(dir.path().join(&r.html_path).is_file());
        assert!(r.item_count > 0);
    }
    let names: std::collections::BTreeSet<&str> =
        records.iter().map(|r| r.archive_path.as_str()).collect();
    assert_eq!(names.len(), records.len());
}

#[test]
fn missing_connectors_degrade_without_galleries() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.connectors.clear();
    let report = run(cfg, "pipeline", &mut NullPublisher);
    assert_eq!(report.events, 2);
    assert_eq!(report.galleries, 0);
    assert_eq!(report.unillustrated, 2);
    assert!(report
        .outcomes
        .iter()
        .all(|o| o.status == EventStatus::Unillustrated));
    assert_eq!(
        std::fs::read_dir(dir.path())
            .map(|d| d.count())
            .unwrap_or(0),
        0
    );
}

#[test]
fn min_items_threshold_leaves_events_unillustrated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.min_items = 1000;
    let report = run(cfg, "pipeline", &mut NullPublisher);
    assert_eq!(report.illustrated, 0);
    assert!(report
        .outcomes
        .iter()
        .all(|o| o.status == EventStatus::Unillustrated && o.candidate_items > 0));
}

#[test]
fn malformed_records_are_counted_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(config(dir.path()), "olympics_48h", &mut NullPublisher);
    assert_eq!(report.records_read, 71);
    assert_eq!(report.malformed_records, 3);
    assert_eq!(report.skipped_bot_edits, 6);
    assert_eq!(report.events, 8);
    assert_eq!(report.unique_events, 7);
    assert_eq!(report.failed, 0);
    assert!(report.pair_contract_holds());
}

#[test]
fn json_lines_publisher_writes_one_record_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let mut publisher = JsonLinesPublisher(Vec::new());
    let report = run(config(dir.path()), "pipeline", &mut publisher);
    let text = String::from_utf8(publisher.0).unwrap();
    let parsed: Vec<GalleryRecord> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(parsed.len(), report.galleries);
}

#[test]
fn config_errors_are_reported() {
    let base = fixture("");
    assert!(matches!(
        PipelineConfig::from_toml_str("top_k = 0", &base),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        PipelineConfig::from_toml_str("bogus_key = 1", &base),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        PipelineConfig::from_toml_str("workers = \"four\"", &base),
        Err(Error::Config(_))
    ));
    let cfg = PipelineConfig::from_toml_str(
        "[[connectors]]\ntype = \"fixture\"\nname = \"x\"\ndir = \"nope\"\n",
        &base,
    )
    .unwrap();
    assert!(Pipeline::from_config(cfg).is_err());
}
