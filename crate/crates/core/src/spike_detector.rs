//! Breaking-news decisions over concept clusters.
//!
//! A cluster is breaking when the most recent unbroken run of its edits
//! (consecutive gaps at most `max_inter_edit_gap`) reaches the configured
//! edit, editor and language counts. Emissions for one cluster form a chain:
//! re-emissions need both `re_emit_throttle` seconds of distance and at least
//! one new edit, and a chain ends when the cluster expires.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::concept_graph::{
    ArticleRef, ClusterStore, ConceptCluster, LanglinkResolver, UpsertOutcome,
};
use crate::edit_stream::EditEvent;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub min_edits: usize,
    pub min_editors: usize,
    pub min_languages: usize,
    /// Seconds.
    pub max_inter_edit_gap: i64,
    /// Seconds of inactivity before a cluster leaves the monitoring loop.
    pub ttl: i64,
    /// Seconds.
    pub re_emit_throttle: i64,
    pub ignore_flagged_bots: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            min_edits: 5,
            min_editors: 2,
            min_languages: 2,
            max_inter_edit_gap: 240,
            ttl: 3600,
            re_emit_throttle: 60,
            ignore_flagged_bots: false,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_edits == 0
            || self.min_editors == 0
            || self.min_languages == 0
            || self.max_inter_edit_gap <= 0
            || self.ttl <= 0
            || self.re_emit_throttle <= 0
        {
            return Err(Error::Config(
                "monitor thresholds must all be positive".into(),
            ));
        }
        if self.min_editors > self.min_edits {
            return Err(Error::Config(
                "min_editors must not exceed min_edits".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BreakingNewsEvent {
    /// `<cluster key>#<generation>`; stable across re-emissions.
    pub event_id: String,
    pub cluster_id: String,
    pub generation: u32,
    pub members: BTreeSet<ArticleRef>,
    pub search_terms: Vec<String>,
    pub article_urls: Vec<String>,
    pub detected_at: i64,
    pub edit_count: usize,
    pub editor_count: usize,
    pub language_count: usize,
    /// Event id of the first emission in this unbroken chain.
    pub chain_id: String,
    pub re_emission: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunStats {
    pub edits: usize,
    pub editors: usize,
    pub languages: usize,
}

/// Counts over the most recent maximal run of edits whose consecutive gaps
/// are each at most `max_gap`.
pub fn recent_run_stats(cluster: &ConceptCluster, max_gap: i64) -> RunStats {
    let edits = &cluster.edits;
    if edits.is_empty() {
        return RunStats {
            edits: 0,
            editors: 0,
            languages: 0,
        };
    }
    let mut start = edits.len() - 1;
    while start > 0 && edits[start].timestamp - edits[start - 1].timestamp <= max_gap {
        start -= 1;
    }
    let run = &edits[start..];
    let editors: BTreeSet<&str> = run.iter().map(|e| e.editor.as_str()).collect();
    let languages: BTreeSet<&str> = run.iter().map(|e| e.language.as_str()).collect();
    RunStats {
        edits: run.len(),
        editors: editors.len(),
        languages: languages.len(),
    }
}

pub fn evaluate_breaking(cluster: &ConceptCluster, config: &MonitorConfig, now: i64) -> bool {
    if now >= cluster.ttl_deadline {
        return false;
    }
    let stats = recent_run_stats(cluster, config.max_inter_edit_gap);
    stats.edits >= config.min_edits
        && stats.editors >= config.min_editors
        && stats.languages >= config.min_languages
}

pub fn expire_clusters(store: &mut ClusterStore, now: i64) -> Vec<String> {
    store.expire(now)
}

/// Titles of the non-alias members: the key language first, then the rest
/// by language code.
pub fn search_terms_for_cluster(cluster: &ConceptCluster) -> Vec<String> {
    ordered_members(cluster)
        .into_iter()
        .map(|m| m.title.replace('_', " "))
        .collect()
}

fn ordered_members(cluster: &ConceptCluster) -> Vec<&ArticleRef> {
    let key_lang = cluster.key_language();
    let mut members: Vec<&ArticleRef> = cluster.members.iter().collect();
    members.sort_by(|a, b| {
        (a.language != key_lang, &a.language, &a.title).cmp(&(
            b.language != key_lang,
            &b.language,
            &b.title,
        ))
    });
    members
}

#[derive(Clone, Debug)]
struct EmissionState {
    last_emit: i64,
    edits_at_emit: usize,
    chain_id: String,
}

/// Emission bookkeeping on top of [`evaluate_breaking`].
#[derive(Clone, Debug)]
pub struct SpikeDetector {
    config: MonitorConfig,
    emissions: HashMap<String, EmissionState>,
    unique_events: usize,
    emitted: usize,
}

impl SpikeDetector {
    pub fn new(config: MonitorConfig) -> Self {
        Self {
            config,
            emissions: HashMap::new(),
            unique_events: 0,
            emitted: 0,
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    /// Number of distinct emission chains started so far.
    pub fn unique_events(&self) -> usize {
        self.unique_events
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Carries emission state over from clusters that were merged or
    /// re-keyed into `outcome.id`.
    pub fn follow_upsert(&mut self, outcome: &UpsertOutcome) {
        let mut inherited: Option<EmissionState> = None;
        for old in &outcome.previous_ids {
            if let Some(state) = self.emissions.remove(old) {
                inherited = match inherited {
                    Some(cur) if cur.last_emit >= state.last_emit => Some(cur),
                    _ => Some(state),
                };
            }
        }
        if let Some(state) = inherited {
            self.emissions.insert(outcome.id.clone(), state);
        }
    }

    pub fn forget(&mut self, cluster_ids: &[String]) {
        for id in cluster_ids {
            self.emissions.remove(id);
        }
    }

    /// Emits an event for a cluster that currently satisfies the breaking
    /// conditions, unless the throttle suppresses it.
    pub fn on_breaking(&mut self, cluster: &ConceptCluster, now: i64) -> Option<BreakingNewsEvent> {
        let edit_count = cluster.edits.len();
        let event_id = cluster.event_id();
        let (chain_id, re_emission) = match self.emissions.get(&cluster.id) {
            Some(prev) => {
                if now - prev.last_emit < self.config.re_emit_throttle
                    || edit_count <= prev.edits_at_emit
                {
                    return None;
                }
                (prev.chain_id.clone(), true)
            }
            None => {
                self.unique_events += 1;
                (event_id.clone(), false)
            }
        };
        self.emissions.insert(
            cluster.id.clone(),
            EmissionState {
                last_emit: now,
                edits_at_emit: edit_count,
                chain_id: chain_id.clone(),
            },
        );
        self.emitted += 1;

        let stats = recent_run_stats(cluster, self.config.max_inter_edit_gap);
        let members = ordered_members(cluster);
        Some(BreakingNewsEvent {
            event_id,
            cluster_id: cluster.id.clone(),
            generation: cluster.generation,
            members: cluster.members.clone(),
            search_terms: search_terms_for_cluster(cluster),
            article_urls: members.iter().map(|m| m.url()).collect(),
            detected_at: now,
            edit_count: stats.edits,
            editor_count: stats.editors,
            language_count: stats.languages,
            chain_id,
            re_emission,
        })
    }
}

/// The monitoring loop state: live clusters plus emission bookkeeping.
pub struct Monitor<R> {
    store: ClusterStore,
    detector: SpikeDetector,
    resolver: R,
    skipped_bot_edits: usize,
}

impl<R: LanglinkResolver> Monitor<R> {
    pub fn new(config: MonitorConfig, resolver: R) -> Self {
        Self {
            store: ClusterStore::new(config.ttl),
            detector: SpikeDetector::new(config),
            resolver,
            skipped_bot_edits: 0,
        }
    }

    pub fn store(&self) -> &ClusterStore {
        &self.store
    }

    pub fn detector(&self) -> &SpikeDetector {
        &self.detector
    }

    pub fn skipped_bot_edits(&self) -> usize {
        self.skipped_bot_edits
    }

    /// Expires stale clusters as of `event.timestamp`, files the edit and
    /// returns an emission if the edit's cluster is (still) breaking.
    pub fn ingest(&mut self, event: &EditEvent) -> Option<BreakingNewsEvent> {
        if self.detector.config.ignore_flagged_bots && event.is_flagged_bot() {
            self.skipped_bot_edits += 1;
            return None;
        }
        let now = event.timestamp;
        self.expire(now);
        let outcome = self.store.upsert_edit(event, &self.resolver);
        self.detector.follow_upsert(&outcome);
        let cluster = self.store.get(&outcome.id)?;
        if !evaluate_breaking(cluster, &self.detector.config, now) {
            return None;
        }
        self.detector.on_breaking(cluster, now)
    }

    pub fn expire(&mut self, now: i64) -> Vec<String> {
        let expired = expire_clusters(&mut self.store, now);
        self.detector.forget(&expired);
        expired
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept_graph::{EditRecord, FixtureResolver, NoLinks};
    use proptest::prelude::*;

    fn cluster(edits: &[(i64, &str, &str)]) -> ConceptCluster {
        let edits: Vec<EditRecord> = edits
            .iter()
            .map(|&(timestamp, editor, language)| EditRecord {
                timestamp,
                editor: editor.into(),
                language: language.into(),
                title: "T".into(),
            })
            .collect();
        let langs: BTreeSet<ArticleRef> = edits
            .iter()
            .map(|e| ArticleRef::new(e.language.clone(), "T"))
            .collect();
        let last = edits.iter().map(|e| e.timestamp).max().unwrap_or(0);
        ConceptCluster {
            id: cluster_key_of(&langs),
            generation: 1,
            members: langs,
            aliases: BTreeSet::new(),
            first_seen: edits.first().map_or(0, |e| e.timestamp),
            last_seen: last,
            ttl_deadline: last + 3600,
            edits,
        }
    }

    fn cluster_key_of(m: &BTreeSet<ArticleRef>) -> String {
        crate::concept_graph::cluster_key(m).unwrap_or_default()
    }

    fn cfg() -> MonitorConfig {
        MonitorConfig {
            min_edits: 5,
            min_editors: 2,
            min_languages: 2,
            max_inter_edit_gap: 240,
            ..MonitorConfig::default()
        }
    }

    fn ev(lang: &str, title: &str, editor: &str, ts: i64) -> EditEvent {
        EditEvent {
            language: lang.into(),
            title: title.into(),
            editor: editor.into(),
            byte_delta: 10,
            diff_url: "u".into(),
            comment: String::new(),
            timestamp: ts,
            flags: String::new(),
        }
    }

    #[test]
    fn five_edits_three_editors_two_languages() {
        let c = cluster(&[
            (0, "a", "en"),
            (60, "b", "en"),
            (120, "c", "de"),
            (180, "a", "de"),
            (240, "b", "en"),
        ]);
        assert!(evaluate_breaking(&c, &cfg(), 250));
        let four = cluster(&[
            (0, "a", "en"),
            (60, "b", "en"),
            (120, "c", "de"),
            (180, "a", "de"),
        ]);
        assert!(!evaluate_breaking(&four, &cfg(), 200));
        assert!(!evaluate_breaking(&cluster(&[(0, "a", "en")]), &cfg(), 1));
    }

    #[test]
    fn gap_breaks_the_run() {
        // 300 s gap before the last three edits
        let c = cluster(&[
            (0, "a", "en"),
            (60, "b", "de"),
            (360, "c", "de"),
            (420, "a", "en"),
            (480, "b", "en"),
        ]);
        assert_eq!(recent_run_stats(&c, 240).edits, 3);
        assert!(!evaluate_breaking(&c, &cfg(), 500));
        assert_eq!(recent_run_stats(&c, 300).edits, 5);
    }

    #[test]
    fn dead_cluster_is_not_breaking() {
        let c = cluster(&[
            (0, "a", "en"),
            (60, "b", "en"),
            (120, "c", "de"),
            (180, "a", "de"),
            (240, "b", "en"),
        ]);
        assert!(!evaluate_breaking(&c, &cfg(), 240 + 3600));
    }

    #[test]
    fn search_terms_key_language_first() {
        let fx = FixtureResolver::parse(
            "en:2014_Winter_Olympics\tru:Зимние_Олимпийские_игры_2014\nen:2014_Winter_Olympics\tde:Olympische_Winterspiele_2014\n",
        )
        .unwrap();
        let mut store = ClusterStore::new(3600);
        store.upsert_edit(&ev("en", "2014_Winter_Olympics", "a", 10), &fx);
        store.upsert_edit(&ev("ru", "Зимние_Олимпийские_игры_2014", "b", 11), &fx);
        let out = store.upsert_edit(&ev("de", "Olympische_Winterspiele_2014", "c", 12), &fx);
        let c = store.get(&out.id).unwrap();
        // "de:..." is the smallest key, so German leads here
        assert_eq!(c.id, "de:Olympische Winterspiele 2014");
        assert_eq!(
            search_terms_for_cluster(c),
            vec![
                "Olympische Winterspiele 2014",
                "2014 Winter Olympics",
                "Зимние Олимпийские игры 2014"
            ]
        );

        let mut en_key = c.clone();
        en_key.id = "en:2014 Winter Olympics".into();
        assert_eq!(
            search_terms_for_cluster(&en_key),
            vec![
                "2014 Winter Olympics",
                "Olympische Winterspiele 2014",
                "Зимние Олимпийские игры 2014"
            ]
        );

        let single = cluster(&[(0, "a", "en")]);
        assert_eq!(search_terms_for_cluster(&single), vec!["T"]);
    }

    #[test]
    fn alias_titles_are_not_search_terms() {
        let mut c = cluster(&[(0, "a", "en"), (1, "b", "de")]);
        c.aliases.insert(ArticleRef::new("en", "Other"));
        assert_eq!(search_terms_for_cluster(&c), vec!["T", "T"]);
        assert!(search_terms_for_cluster(&c)
            .iter()
            .all(|t| !t.contains('_')));
    }

    #[test]
    fn throttle() {
        let mut d = SpikeDetector::new(cfg());
        let mut c = cluster(&[
            (0, "a", "en"),
            (60, "b", "en"),
            (120, "c", "de"),
            (180, "a", "de"),
            (240, "b", "en"),
        ]);
        let first = d.on_breaking(&c, 240).unwrap();
        assert!(!first.re_emission);
        assert!(d.on_breaking(&c, 250).is_none(), "within throttle");
        assert!(d.on_breaking(&c, 301).is_none(), "no new edit");
        c.edits.push(EditRecord {
            timestamp: 301,
            editor: "d".into(),
            language: "de".into(),
            title: "T".into(),
        });
        let again = d.on_breaking(&c, 301).unwrap();
        assert!(again.re_emission);
        assert_eq!(again.chain_id, first.event_id);
        assert_eq!(d.unique_events(), 1);
        assert_eq!(d.emitted(), 2);
    }

    #[test]
    fn innerhofer_morning_and_afternoon() {
        let mut m = Monitor::new(cfg(), NoLinks);
        let mut events = Vec::new();
        let burst = |start: i64| {
            (0..6).map(move |i| {
                let lang = if i % 2 == 0 { "en" } else { "de" };
                let who = ["a", "b", "c"][i as usize % 3];
                ev(lang, "Christof Innerhofer", who, start + i * 60)
            })
        };
        // en and de titles coincide, so without links they are two clusters;
        // link them instead
        let fx =
            FixtureResolver::parse("en:Christof Innerhofer\tde:Christof Innerhofer\n").unwrap();
        let mut m2 = Monitor::new(cfg(), fx);
        for e in burst(10_000).chain(burst(30_000)) {
            events.extend(m2.ingest(&e));
            m.ingest(&e);
        }
        let chains: BTreeSet<_> = events.iter().map(|e| e.chain_id.clone()).collect();
        assert_eq!(m2.detector().unique_events(), 2);
        assert_eq!(chains.len(), 2);
        assert_eq!(
            chains.into_iter().collect::<Vec<_>>(),
            vec![
                "de:Christof Innerhofer#1".to_string(),
                "de:Christof Innerhofer#2".to_string()
            ]
        );
        // unlinked: each language alone never reaches two languages
        assert_eq!(m.detector().unique_events(), 0);
    }

    #[test]
    fn bot_filter() {
        let config = MonitorConfig {
            ignore_flagged_bots: true,
            ..cfg()
        };
        let mut m = Monitor::new(config, NoLinks);
        let mut bot = ev("en", "X", "BotX", 5);
        bot.flags = "B".into();
        assert!(m.ingest(&bot).is_none());
        assert_eq!(m.skipped_bot_edits(), 1);
        assert!(m.store().is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(MonitorConfig::default().validate().is_ok());
        let bad = MonitorConfig {
            min_editors: 6,
            ..MonitorConfig::default()
        };
        assert!(bad.validate().is_err());
        let zero = MonitorConfig {
            ttl: 0,
            ..MonitorConfig::default()
        };
        assert!(zero.validate().is_err());
    }

    proptest! {
        #[test]
        fn adding_an_edit_within_the_run_keeps_breaking(
            gaps in prop::collection::vec(1i64..240, 4..12),
            editors in prop::collection::vec(0usize..4, 12),
            langs in prop::collection::vec(0usize..3, 12),
            extra_gap in 0i64..=240,
            extra_editor in 0usize..4,
            extra_lang in 0usize..3,
        ) {
            let names = ["a", "b", "c", "d"];
            let codes = ["en", "de", "fr"];
            let mut t = 0;
            let mut edits = vec![(t, names[editors[0]], codes[langs[0]])];
            for (i, g) in gaps.iter().enumerate() {
                t += g;
                edits.push((t, names[editors[i + 1]], codes[langs[i + 1]]));
            }
            let c = cluster(&edits);
            let now = t;
            if evaluate_breaking(&c, &cfg(), now) {
                let mut more = edits.clone();
                more.push((t + extra_gap, names[extra_editor], codes[extra_lang]));
                let c2 = cluster(&more);
                prop_assert!(evaluate_breaking(&c2, &cfg(), t + extra_gap));
            }
        }
    }
}
