//! End-to-end orchestration: edits in, archived gallery pairs and published
//! records out.
//!
//! Ingestion and detection run on the caller's thread. Every emitted event
//! is illustrated by a bounded worker pool; results pass through a reorder
//! buffer so publication follows emission order regardless of worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::concept_graph::{
    CachingResolver, FixtureResolver, LanglinkResolver, NoLinks, WikiApiResolver,
};
use crate::dedup_rank::{
    cluster_duplicates, compute_signatures, rank_items, DedupConfig, RankWeights,
};
use crate::edit_stream::{StreamSource, DEFAULT_LANGUAGES};
use crate::error::{Error, Result};
use crate::layout::{
    balance_gallery, check_aesthetics, classify_prominent, loose_geometry, Aesthetics, GalleryKind,
    LayoutItem, LayoutSpec, MediaGallery,
};
use crate::media_ingest::{search_media, Connector, FixtureConnector, SearchOptions};
use crate::render::{
    archive_day, archive_path, compose_png, emit_html, load_rasters, write_atomic, RenderConfig,
};
use crate::spike_detector::{BreakingNewsEvent, Monitor, MonitorConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectorConfig {
    /// A [`FixtureConnector`] over `dir`.
    Fixture { name: String, dir: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LanglinkConfig {
    #[default]
    None,
    /// Tab-separated langlink pairs.
    Fixture { path: PathBuf },
    /// Live MediaWiki and Wikidata APIs.
    Wikipedia { timeout_secs: u64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PublisherConfig {
    #[default]
    None,
    Stdout,
    Webhook {
        url: String,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalleryLayouts {
    pub strict: LayoutSpec,
    pub loose: LayoutSpec,
}

impl GalleryLayouts {
    pub fn spec(&self, kind: GalleryKind) -> &LayoutSpec {
        match kind {
            GalleryKind::StrictOrderEqualSize => &self.strict,
            GalleryKind::LooseOrderVaryingSize => &self.loose,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub monitor: MonitorConfig,
    pub layout: GalleryLayouts,
    pub render: RenderConfig,
    pub dedup: DedupConfig,
    pub rank_weights: RankWeights,
    pub connectors: Vec<ConnectorConfig>,
    pub langlinks: LanglinkConfig,
    pub publisher: PublisherConfig,
    pub archive_dir: PathBuf,
    /// Ranked items offered to each gallery; the rest form the balancing reserve.
    pub top_k: usize,
    /// Events with fewer relevant, deduplicated items stay unillustrated.
    pub min_items: usize,
    pub max_balance_steps: usize,
    pub workers: usize,
    pub search_concurrency: usize,
    /// Recent-changes languages followed in live mode.
    pub languages: Vec<String>,
    pub irc_nick: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            monitor: MonitorConfig::default(),
            layout: GalleryLayouts::default(),
            render: RenderConfig::default(),
            dedup: DedupConfig::default(),
            rank_weights: RankWeights::default(),
            connectors: Vec::new(),
            langlinks: LanglinkConfig::None,
            publisher: PublisherConfig::None,
            archive_dir: PathBuf::from("archive"),
            top_k: 12,
            min_items: 3,
            max_balance_steps: 5,
            workers: 4,
            search_concurrency: 8,
            languages: DEFAULT_LANGUAGES.iter().map(|s| s.to_string()).collect(),
            irc_nick: "newsgallery-monitor".into(),
        }
    }
}

impl PipelineConfig {
    /// Parses TOML; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut cfg.archive_dir);
        for c in &mut cfg.connectors {
            match c {
                ConnectorConfig::Fixture { dir, .. } => resolve(dir),
            }
        }
        if let LanglinkConfig::Fixture { path } = &mut cfg.langlinks {
            resolve(path);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        self.monitor.validate()?;
        self.layout.strict.validate().map_err(config_err)?;
        loose_geometry(&self.layout.loose).map_err(config_err)?;
        self.render.validate()?;
        self.dedup.validate()?;
        self.rank_weights.validate().map_err(config_err)?;
        if self.top_k == 0
            || self.min_items == 0
            || self.workers == 0
            || self.search_concurrency == 0
        {
            return Err(Error::Config(
                "top_k, min_items, workers and search_concurrency must be positive".into(),
            ));
        }
        if self.connectors.is_empty() {
            log::warn!("no media connectors configured: every event will be unillustrated");
        }
        Ok(())
    }
}

fn config_err(e: Error) -> Error {
    Error::Config(e.to_string())
}

/// One published line per archived gallery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GalleryRecord {
    pub event_id: String,
    pub kind: GalleryKind,
    /// PNG dump, relative to the archive directory.
    pub archive_path: String,
    pub html_path: String,
    pub terms: Vec<String>,
    pub item_count: usize,
    pub aesthetics: Aesthetics,
    pub best_effort: bool,
    pub detected_at: i64,
    pub re_emission: bool,
}

pub trait Publisher: Send {
    fn publish(&mut self, record: &GalleryRecord) -> Result<()>;
}

pub struct NullPublisher;

impl Publisher for NullPublisher {
    fn publish(&mut self, _: &GalleryRecord) -> Result<()> {
        Ok(())
    }
}

/// Line-delimited JSON to any writer (stdout in the CLI).
pub struct JsonLinesPublisher<W>(pub W);

impl<W: Write + Send> Publisher for JsonLinesPublisher<W> {
    fn publish(&mut self, record: &GalleryRecord) -> Result<()> {
        let line = serde_json::to_string(record)?;
        writeln!(self.0, "{line}").map_err(|e| Error::io("<publisher>", e))?;
        self.0.flush().map_err(|e| Error::io("<publisher>", e))
    }
}

/// POSTs each record as JSON.
pub struct WebhookPublisher {
    agent: ureq::Agent,
    url: String,
}

impl WebhookPublisher {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            agent,
            url: url.into(),
        }
    }
}

impl Publisher for WebhookPublisher {
    fn publish(&mut self, record: &GalleryRecord) -> Result<()> {
        self.agent
            .post(&self.url)
            .send_json(record)
            .map_err(|e| Error::Connector {
                connector: "webhook".into(),
                reason: e.to_string(),
            })?;
        Ok(())
    }
}

impl Publisher for Vec<GalleryRecord> {
    fn publish(&mut self, record: &GalleryRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

pub fn publisher_for(cfg: &PublisherConfig) -> Box<dyn Publisher> {
    match cfg {
        PublisherConfig::None => Box::new(NullPublisher),
        PublisherConfig::Stdout => Box::new(JsonLinesPublisher(std::io::stdout())),
        PublisherConfig::Webhook { url } => {
            Box::new(WebhookPublisher::new(url.clone(), Duration::from_secs(10)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventStatus {
    Illustrated,
    Unillustrated,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventOutcome {
    pub event_id: String,
    pub detected_at: i64,
    pub re_emission: bool,
    pub status: EventStatus,
    pub degraded: bool,
    /// Relevant items left after deduplication.
    pub candidate_items: usize,
    pub galleries: Vec<GalleryRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub records_read: usize,
    pub malformed_records: usize,
    pub skipped_bot_edits: usize,
    /// Emissions, re-emissions included.
    pub events: usize,
    pub unique_events: usize,
    pub illustrated: usize,
    pub unillustrated: usize,
    pub failed: usize,
    pub degraded: usize,
    pub galleries: usize,
    pub publish_errors: usize,
    pub outcomes: Vec<EventOutcome>,
}

impl RunReport {
    /// Every illustrated event yields exactly one gallery of each kind.
    pub fn pair_contract_holds(&self) -> bool {
        self.galleries == 2 * self.illustrated
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    connectors: Vec<Box<dyn Connector>>,
    resolver: Box<dyn LanglinkResolver>,
}

impl Pipeline {
    pub fn new(
        cfg: PipelineConfig,
        connectors: Vec<Box<dyn Connector>>,
        resolver: Box<dyn LanglinkResolver>,
    ) -> Self {
        Self {
            cfg,
            connectors,
            resolver,
        }
    }

    /// Builds connectors and the langlink resolver named in `cfg`.
    pub fn from_config(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let mut connectors: Vec<Box<dyn Connector>> = Vec::new();
        for c in &cfg.connectors {
            match c {
                ConnectorConfig::Fixture { name, dir } => {
                    if !dir.is_dir() {
                        return Err(Error::io(
                            dir,
                            std::io::Error::from(std::io::ErrorKind::NotFound),
                        ));
                    }
                    connectors.push(Box::new(FixtureConnector::new(name.clone(), dir.clone())));
                }
            }
        }
        let resolver: Box<dyn LanglinkResolver> = match &cfg.langlinks {
            LanglinkConfig::None => Box::new(NoLinks),
            LanglinkConfig::Fixture { path } => Box::new(FixtureResolver::load(path)?),
            LanglinkConfig::Wikipedia { timeout_secs } => Box::new(CachingResolver::new(
                WikiApiResolver::new(Duration::from_secs(*timeout_secs)),
            )),
        };
        Ok(Self::new(cfg, connectors, resolver))
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn run<S: StreamSource>(
        &self,
        mut source: S,
        publisher: &mut dyn Publisher,
    ) -> Result<RunReport> {
        let workers = self.cfg.workers.max(1);
        let mut report = RunReport::default();
        let mut monitor = Monitor::new(self.cfg.monitor.clone(), &self.resolver);

        let (job_tx, job_rx) = mpsc::sync_channel::<(usize, BreakingNewsEvent)>(workers * 2);
        let job_rx = Mutex::new(job_rx);
        let (res_tx, res_rx) = mpsc::channel::<(usize, EventOutcome)>();

        let (outcomes, publish_errors) = thread::scope(|s| {
            for _ in 0..workers {
                let res_tx = res_tx.clone();
                let job_rx = &job_rx;
                s.spawn(move || loop {
                    let job = job_rx.lock().expect("job queue lock").recv();
                    let Ok((seq, event)) = job else { break };
                    if res_tx.send((seq, self.illustrate(&event))).is_err() {
                        break;
                    }
                });
            }
            drop(res_tx);

            let collector = s.spawn(move || {
                let mut pending = BTreeMap::new();
                let mut next = 0;
                let mut outcomes = Vec::new();
                let mut publish_errors = 0;
                for (seq, outcome) in res_rx {
                    pending.insert(seq, outcome);
                    while let Some(outcome) = pending.remove(&next) {
                        for record in &outcome.galleries {
                            if let Err(e) = publisher.publish(record) {
                                log::warn!("publishing {} failed: {e}", record.archive_path);
                                publish_errors += 1;
                            }
                        }
                        outcomes.push(outcome);
                        next += 1;
                    }
                }
                (outcomes, publish_errors)
            });

            let mut seq = 0;
            while let Some(record) = source.next_record() {
                report.records_read += 1;
                let edit = match record.and_then(|r| r.parse()) {
                    Ok(edit) => edit,
                    Err(e) => {
                        log::debug!("skipping record: {e}");
                        report.malformed_records += 1;
                        continue;
                    }
                };
                if let Some(event) = monitor.ingest(&edit) {
                    log::info!("breaking: {} {:?}", event.event_id, event.search_terms);
                    if job_tx.send((seq, event)).is_err() {
                        break;
                    }
                    seq += 1;
                }
            }
            drop(job_tx);
            collector.join().expect("collector panicked")
        });

        report.skipped_bot_edits = monitor.skipped_bot_edits();
        report.unique_events = monitor.detector().unique_events();
        report.events = outcomes.len();
        report.publish_errors = publish_errors;
        for o in &outcomes {
            match o.status {
                EventStatus::Illustrated => report.illustrated += 1,
                EventStatus::Unillustrated => report.unillustrated += 1,
                EventStatus::Failed => report.failed += 1,
            }
            report.degraded += usize::from(o.degraded);
            report.galleries += o.galleries.len();
        }
        report.outcomes = outcomes;
        Ok(report)
    }

    /// Search, deduplicate, rank, lay out both kinds, render and archive.
    pub fn illustrate(&self, event: &BreakingNewsEvent) -> EventOutcome {
        let mut outcome = EventOutcome {
            event_id: event.event_id.clone(),
            detected_at: event.detected_at,
            re_emission: event.re_emission,
            status: EventStatus::Unillustrated,
            degraded: false,
            candidate_items: 0,
            galleries: Vec::new(),
            error: None,
        };
        if let Err(e) = self.try_illustrate(event, &mut outcome) {
            log::warn!("event {} failed: {e}", event.event_id);
            outcome.status = EventStatus::Failed;
            outcome.galleries.clear();
            outcome.error = Some(e.to_string());
        }
        outcome
    }

    fn try_illustrate(&self, event: &BreakingNewsEvent, outcome: &mut EventOutcome) -> Result<()> {
        let cfg = &self.cfg;
        let found = search_media(
            &event.search_terms,
            &self.connectors,
            SearchOptions {
                max_concurrency: cfg.search_concurrency,
            },
        )?;
        outcome.degraded = found.degraded;
        let signatures = compute_signatures(&found.items, &cfg.dedup);
        let clusters =
            cluster_duplicates(&found.items, &signatures, &cfg.dedup, &cfg.rank_weights)?;
        let ranked = rank_items(&clusters, &cfg.rank_weights)?;
        outcome.candidate_items = ranked.len();
        if ranked.len() < cfg.min_items {
            return Ok(());
        }

        let flags = classify_prominent(&ranked, &cfg.rank_weights);
        let all = LayoutItem::zip(&ranked, &flags);
        let split = cfg.top_k.min(all.len());
        let (top, reserve) = all.split_at(split);

        let mut galleries = Vec::with_capacity(2);
        for kind in GalleryKind::ALL {
            let g = balance_gallery(
                top,
                reserve,
                cfg.layout.spec(kind),
                kind,
                cfg.max_balance_steps,
            )?;
            galleries.push(self.archive(event, g)?);
        }
        outcome.galleries = galleries;
        outcome.status = EventStatus::Illustrated;
        Ok(())
    }

    fn archive(&self, event: &BreakingNewsEvent, g: MediaGallery) -> Result<GalleryRecord> {
        let rasters = load_rasters(&g);
        let (_, png) = compose_png(&g, &rasters, &self.cfg.render)?;
        let html = emit_html(&g);
        let day = archive_day(event.detected_at)?;
        let name = archive_path(g.kind, &event.search_terms, event.detected_at)?;
        let html_name = format!("{}.html", name.trim_end_matches(".png"));
        let dir = self.cfg.archive_dir.join(&day);
        write_atomic(&dir.join(&name), &png)?;
        write_atomic(&dir.join(&html_name), html.as_bytes())?;
        Ok(GalleryRecord {
            event_id: event.event_id.clone(),
            kind: g.kind,
            archive_path: format!("{day}/{name}"),
            html_path: format!("{day}/{html_name}"),
            terms: event.search_terms.clone(),
            item_count: g.len(),
            aesthetics: check_aesthetics(&g, 1.0),
            best_effort: g.best_effort,
            detected_at: event.detected_at,
            re_emission: event.re_emission,
        })
    }
}
