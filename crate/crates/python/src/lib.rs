use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use newsgallery_core::concept_graph::{FixtureResolver, LanglinkResolver, NoLinks};
use newsgallery_core::edit_stream::{ReplaySource, StreamSource};
use newsgallery_core::layout::{
    balance_gallery, classify_prominent, GalleryKind, LayoutItem, LayoutSpec,
};
use newsgallery_core::media_ingest::MediaItem;
use newsgallery_core::metrics::{compute_metrics, parse_labels, BUNDLED_LABELS};
use newsgallery_core::pipeline::{LanglinkConfig, PipelineConfig};
use newsgallery_core::spike_detector::Monitor;
use newsgallery_core::{render, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Render(_) | Error::Connector { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Whole-phrase, case-insensitive match of `phrase` in `text`.
#[pyfunction]
fn matches_phrase(text: &str, phrase: &str) -> PyResult<bool> {
    newsgallery_core::media_ingest::matches_phrase(text, phrase).map_err(py_err)
}

/// Recall and precision from rater labels in CSV form (bundled labels when omitted).
#[pyfunction]
#[pyo3(signature = (labels_csv=None))]
fn metrics<'py>(py: Python<'py>, labels_csv: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let labels = parse_labels(labels_csv.unwrap_or(BUNDLED_LABELS)).map_err(py_err)?;
    to_py(py, &compute_metrics(&labels).map_err(py_err)?)
}

/// Balanced gallery for a JSON array of media items.
#[pyfunction]
#[pyo3(signature = (items_json, kind="strict", width=602, max_row_height=200, columns=3, gutter=2))]
fn layout<'py>(
    py: Python<'py>,
    items_json: &str,
    kind: &str,
    width: u32,
    max_row_height: u32,
    columns: u32,
    gutter: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: GalleryKind = kind.parse().map_err(py_err)?;
    let items: Vec<MediaItem> =
        serde_json::from_str(items_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let cfg = PipelineConfig::default();
    let flags = classify_prominent(&items, &cfg.rank_weights);
    let all = LayoutItem::zip(&items, &flags);
    let spec = LayoutSpec::new(width, max_row_height, columns, gutter);
    let g = balance_gallery(&all, &[], &spec, kind, cfg.max_balance_steps).map_err(py_err)?;
    to_py(py, &g)
}

/// PNG file name for a gallery within its day directory.
#[pyfunction]
fn archive_path(kind: &str, terms: Vec<String>, unix_ts: i64) -> PyResult<String> {
    let kind: GalleryKind = kind.parse().map_err(py_err)?;
    render::archive_path(kind, &terms, unix_ts).map_err(py_err)
}

/// Breaking-news events detected in a replay file.
#[pyfunction]
#[pyo3(signature = (path, config_toml=None, base_dir=None))]
fn detect_replay<'py>(
    py: Python<'py>,
    path: PathBuf,
    config_toml: Option<&str>,
    base_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = match config_toml {
        Some(text) => {
            PipelineConfig::from_toml_str(text, base_dir.as_deref().unwrap_or(Path::new(".")))
                .map_err(py_err)?
        }
        None => PipelineConfig::default(),
    };
    let resolver: Box<dyn LanglinkResolver> = match &cfg.langlinks {
        LanglinkConfig::Fixture { path } => Box::new(FixtureResolver::load(path).map_err(py_err)?),
        _ => Box::new(NoLinks),
    };
    let mut monitor = Monitor::new(cfg.monitor.clone(), resolver);
    let mut source = ReplaySource::open(&path).map_err(py_err)?;
    let mut events = Vec::new();
    while let Some(record) = source.next_record() {
        if let Ok(edit) = record.and_then(|r| r.parse()) {
            events.extend(monitor.ingest(&edit));
        }
    }
    to_py(py, &events)
}

#[pymodule]
fn newsgallery(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(matches_phrase, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(layout, m)?)?;
    m.add_function(wrap_pyfunction!(archive_path, m)?)?;
    m.add_function(wrap_pyfunction!(detect_replay, m)?)?;
    Ok(())
}
