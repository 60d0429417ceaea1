//! Cross-language concept clusters.
//!
//! Every edited article is mapped, through a [`LanglinkResolver`], onto the
//! cluster that already holds one of its interlanguage equivalents. Clusters
//! merge when a new edit reveals that two of them describe the same concept.
//! The cluster key is the lexicographically smallest `language:title` among
//! its members; keys displaced by a merge stay reachable as aliases.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::edit_stream::EditEvent;
use crate::error::{Error, Result};
use crate::text::normalize_title;
use crate::union_find::DisjointSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArticleRef {
    pub language: String,
    pub title: String,
}

impl ArticleRef {
    pub fn new(language: impl Into<String>, title: &str) -> Self {
        Self {
            language: language.into(),
            title: normalize_title(title),
        }
    }

    /// Parses `lang:title`, splitting at the first colon.
    pub fn parse(s: &str) -> Result<Self> {
        let (lang, title) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("expected lang:title, got {s:?}")))?;
        if lang.is_empty() || title.trim().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "expected lang:title, got {s:?}"
            )));
        }
        Ok(Self::new(lang, title.trim()))
    }

    pub fn key(&self) -> String {
        format!("{}:{}", self.language, self.title)
    }

    pub fn url(&self) -> String {
        let path = self.title.replace(' ', "_");
        if self.language == "wikidata" {
            format!("https://www.wikidata.org/wiki/{path}")
        } else {
            format!("https://{}.wikipedia.org/wiki/{path}", self.language)
        }
    }
}

impl fmt::Display for ArticleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.language, self.title)
    }
}

/// Source of interlanguage equivalents. Results never include the query.
pub trait LanglinkResolver: Send + Sync {
    fn lookup(&self, article: &ArticleRef) -> Result<BTreeSet<ArticleRef>>;
}

impl<R: LanglinkResolver + ?Sized> LanglinkResolver for &R {
    fn lookup(&self, article: &ArticleRef) -> Result<BTreeSet<ArticleRef>> {
        (**self).lookup(article)
    }
}

impl<R: LanglinkResolver + ?Sized> LanglinkResolver for Box<R> {
    fn lookup(&self, article: &ArticleRef) -> Result<BTreeSet<ArticleRef>> {
        (**self).lookup(article)
    }
}

/// Resolver with no links at all.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoLinks;

impl LanglinkResolver for NoLinks {
    fn lookup(&self, _: &ArticleRef) -> Result<BTreeSet<ArticleRef>> {
        Ok(BTreeSet::new())
    }
}

/// Direct (non-transitive) adjacency: `lookup(a)` returns exactly the refs
/// linked to `a` by some pair. Mirrors what a live API returns.
#[derive(Debug, Default, Clone)]
pub struct DirectLinks {
    links: HashMap<ArticleRef, BTreeSet<ArticleRef>>,
}

impl DirectLinks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn link(&mut self, a: ArticleRef, b: ArticleRef) {
        if a == b {
            return;
        }
        self.links.entry(a.clone()).or_default().insert(b.clone());
        self.links.entry(b).or_default().insert(a);
    }
}

impl LanglinkResolver for DirectLinks {
    fn lookup(&self, article: &ArticleRef) -> Result<BTreeSet<ArticleRef>> {
        Ok(self.links.get(article).cloned().unwrap_or_default())
    }
}

/// Fixture resolver: bidirectional `lang:title<TAB>lang:title` pairs closed
/// under connectivity, so every article resolves to its whole component.
#[derive(Debug, Default, Clone)]
pub struct FixtureResolver {
    component_of: HashMap<ArticleRef, usize>,
    components: Vec<BTreeSet<ArticleRef>>,
}

impl FixtureResolver {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!("langlink fixture line {}: expected a tab", no + 1))
            })?;
            pairs.push((ArticleRef::parse(a)?, ArticleRef::parse(b)?));
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (ArticleRef, ArticleRef)>) -> Self {
        let mut ids: BTreeMap<ArticleRef, usize> = BTreeMap::new();
        let mut ds = DisjointSet::new(0);
        let mut id_of =
            |r: ArticleRef, ds: &mut DisjointSet| *ids.entry(r).or_insert_with(|| ds.add());
        let mut edges = Vec::new();
        for (a, b) in pairs {
            let ia = id_of(a, &mut ds);
            let ib = id_of(b, &mut ds);
            edges.push((ia, ib));
        }
        for (a, b) in edges {
            ds.union(a, b);
        }
        let mut by_index: Vec<Option<ArticleRef>> = vec![None; ds.len()];
        for (r, i) in ids {
            by_index[i] = Some(r);
        }
        let mut component_of = HashMap::new();
        let mut components = Vec::new();
        for comp in ds.components() {
            let set: BTreeSet<ArticleRef> =
                comp.iter().filter_map(|&i| by_index[i].clone()).collect();
            for r in &set {
                component_of.insert(r.clone(), components.len());
            }
            components.push(set);
        }
        Self {
            component_of,
            components,
        }
    }

    pub fn components(&self) -> &[BTreeSet<ArticleRef>] {
        &self.components
    }
}

impl LanglinkResolver for FixtureResolver {
    fn lookup(&self, article: &ArticleRef) -> Result<BTreeSet<ArticleRef>> {
        Ok(self
            .component_of
            .get(article)
            .map(|&c| {
                self.components[c]
                    .iter()
                    .filter(|r| *r != article)
                    .cloned()
                    .collect()
            })
            .unwrap_or_default())
    }
}

/// Memoizes successful lookups for the lifetime of the resolver.
pub struct CachingResolver<R> {
    inner: R,
    cache: Mutex<HashMap<ArticleRef, BTreeSet<ArticleRef>>>,
}

impl<R: LanglinkResolver> CachingResolver<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }
}

impl<R: LanglinkResolver> LanglinkResolver for CachingResolver<R> {
    fn lookup(&self, article: &ArticleRef) -> Result<BTreeSet<ArticleRef>> {
        if let Some(hit) = self.cache.lock().ok().and_then(|c| c.get(article).cloned()) {
            return Ok(hit);
        }
        let found = self.inner.lookup(article)?;
        if let Ok(mut cache) = self.cache.lock() {
            cache.insert(article.clone(), found.clone());
        }
        Ok(found)
    }
}

/// Live resolver against the MediaWiki and Wikidata APIs.
pub struct WikiApiResolver {
    agent: ureq::Agent,
}

impl WikiApiResolver {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .user_agent("newsgallery/0.1 (langlink resolver)")
            .build()
            .into();
        Self { agent }
    }

    fn get_json(&self, url: &str, query: &[(&str, &str)]) -> Result<serde_json::Value> {
        let mut req = self.agent.get(url);
        for (k, v) in query {
            req = req.query(*k, *v);
        }
        let mut resp = req.call().map_err(|e| Error::Resolver(e.to_string()))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| Error::Resolver(e.to_string()))
    }
}

/// Extracts interlanguage links (and the Wikidata item, if present) from a
/// `action=query&prop=langlinks|pageprops&formatversion=2` response.
pub fn parse_langlinks_response(body: &serde_json::Value) -> BTreeSet<ArticleRef> {
    let mut out = BTreeSet::new();
    let pages = body["query"]["pages"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    for page in pages {
        for link in page["langlinks"].as_array().into_iter().flatten() {
            if let (Some(lang), Some(title)) = (link["lang"].as_str(), link["title"].as_str()) {
                out.insert(ArticleRef::new(lang, title));
            }
        }
        if let Some(item) = page["pageprops"]["wikibase_item"].as_str() {
            out.insert(ArticleRef::new("wikidata", item));
        }
    }
    out
}

/// Extracts Wikipedia sitelinks from a `wbgetentities&props=sitelinks`
/// response. Only `<lang>wiki` sites are kept.
pub fn parse_sitelinks_response(body: &serde_json::Value) -> BTreeSet<ArticleRef> {
    let mut out = BTreeSet::new();
    let Some(entities) = body["entities"].as_object() else {
        return out;
    };
    for entity in entities.values() {
        let Some(links) = entity["sitelinks"].as_object() else {
            continue;
        };
        for (site, link) in links {
            let Some(lang) = site.strip_suffix("wiki") else {
                continue;
            };
            if lang.is_empty()
                || matches!(
                    lang,
                    "commons" | "species" | "meta" | "mediawiki" | "sources"
                )
            {
                continue;
            }
            if let Some(title) = link["title"].as_str() {
                out.insert(ArticleRef::new(lang.replace('_', "-"), title));
            }
        }
    }
    out
}

impl LanglinkResolver for WikiApiResolver {
    fn lookup(&self, article: &ArticleRef) -> Result<BTreeSet<ArticleRef>> {
        let mut found = if article.language == "wikidata" {
            let body = self.get_json(
                "https://www.wikidata.org/w/api.php",
                &[
                    ("action", "wbgetentities"),
                    ("format", "json"),
                    ("props", "sitelinks"),
                    ("ids", &article.title),
                ],
            )?;
            parse_sitelinks_response(&body)
        } else {
            let url = format!("https://{}.wikipedia.org/w/api.php", article.language);
            let body = self.get_json(
                &url,
                &[
                    ("action", "query"),
                    ("format", "json"),
                    ("formatversion", "2"),
                    ("prop", "langlinks|pageprops"),
                    ("ppprop", "wikibase_item"),
                    ("lllimit", "max"),
                    ("titles", &article.title),
                ],
            )?;
            parse_langlinks_response(&body)
        };
        found.remove(article);
        Ok(found)
    }
}

/// `{ref} ∪ resolver.lookup(ref)`; resolver failures degrade to `{ref}`.
pub fn resolve_equivalents(
    article: &ArticleRef,
    resolver: &dyn LanglinkResolver,
) -> BTreeSet<ArticleRef> {
    let mut out = match resolver.lookup(article) {
        Ok(found) => found,
        Err(e) => {
            log::warn!("langlink lookup for {article} failed: {e}");
            BTreeSet::new()
        }
    };
    out.insert(article.clone());
    out
}

pub fn cluster_key<'a>(members: impl IntoIterator<Item = &'a ArticleRef>) -> Result<String> {
    members
        .into_iter()
        .map(ArticleRef::key)
        .min()
        .ok_or_else(|| Error::InvalidArgument("cluster_key of an empty member set".into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRecord {
    pub timestamp: i64,
    pub editor: String,
    pub language: String,
    pub title: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConceptCluster {
    pub id: String,
    /// How many clusters have been created under `id` so far, this one
    /// included. An expired concept that is edited again comes back with
    /// the next generation.
    pub generation: u32,
    /// One member per language.
    pub members: BTreeSet<ArticleRef>,
    /// Extra titles in a language that already has a member.
    pub aliases: BTreeSet<ArticleRef>,
    /// Sorted by timestamp; equal timestamps keep arrival order.
    pub edits: Vec<EditRecord>,
    pub first_seen: i64,
    pub last_seen: i64,
    pub ttl_deadline: i64,
}

impl ConceptCluster {
    pub fn event_id(&self) -> String {
        format!("{}#{}", self.id, self.generation)
    }

    pub fn key_language(&self) -> &str {
        self.id.split_once(':').map_or("", |(l, _)| l)
    }

    pub fn all_members(&self) -> impl Iterator<Item = &ArticleRef> {
        self.members.iter().chain(self.aliases.iter())
    }

    pub fn contains(&self, r: &ArticleRef) -> bool {
        self.members.contains(r) || self.aliases.contains(r)
    }

    fn first_edit_of(&self, r: &ArticleRef) -> i64 {
        self.edits
            .iter()
            .find(|e| e.language == r.language && e.title == r.title)
            .map_or(i64::MAX, |e| e.timestamp)
    }

    /// Picks one primary per language (earliest first edit, then title);
    /// the rest become aliases.
    fn reassign_primaries(&mut self) {
        let everyone: Vec<ArticleRef> = self.all_members().cloned().collect();
        let mut by_lang: BTreeMap<&str, Vec<&ArticleRef>> = BTreeMap::new();
        for r in &everyone {
            by_lang.entry(r.language.as_str()).or_default().push(r);
        }
        let mut members = BTreeSet::new();
        let mut aliases = BTreeSet::new();
        for (lang, mut refs) in by_lang {
            refs.sort_by_key(|r| (self.first_edit_of(r), r.title.clone()));
            members.insert(refs[0].clone());
            if refs.len() > 1 {
                log::warn!(
                    "cluster {} has {} titles in language {lang}; keeping {:?} as primary",
                    self.id,
                    refs.len(),
                    refs[0].title
                );
            }
            aliases.extend(refs[1..].iter().map(|r| (*r).clone()));
        }
        self.members = members;
        self.aliases = aliases;
    }

    fn insert_edit(&mut self, edit: EditRecord) {
        let pos = self
            .edits
            .partition_point(|e| e.timestamp <= edit.timestamp);
        self.edits.insert(pos, edit);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpsertOutcome {
    pub id: String,
    pub is_new: bool,
    /// Keys of the clusters the edit landed in before any merge.
    pub previous_ids: Vec<String>,
}

/// Live clusters, single writer.
#[derive(Clone, Debug)]
pub struct ClusterStore {
    ttl: i64,
    clusters: BTreeMap<String, ConceptCluster>,
    index: HashMap<ArticleRef, String>,
    aliases: HashMap<String, String>,
    generations: HashMap<String, u32>,
    edit_count: usize,
}

impl ClusterStore {
    pub fn new(ttl_seconds: i64) -> Self {
        Self {
            ttl: ttl_seconds,
            clusters: BTreeMap::new(),
            index: HashMap::new(),
            aliases: HashMap::new(),
            generations: HashMap::new(),
            edit_count: 0,
        }
    }

    pub fn ttl(&self) -> i64 {
        self.ttl
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn edit_count(&self) -> usize {
        self.edit_count
    }

    /// Looks a cluster up by its key or by a key it was merged away from.
    pub fn get(&self, id: &str) -> Option<&ConceptCluster> {
        self.clusters
            .get(id)
            .or_else(|| self.aliases.get(id).and_then(|k| self.clusters.get(k)))
    }

    pub fn cluster_of(&self, article: &ArticleRef) -> Option<&ConceptCluster> {
        self.index.get(article).and_then(|k| self.clusters.get(k))
    }

    pub fn clusters(&self) -> impl Iterator<Item = &ConceptCluster> {
        self.clusters.values()
    }

    pub fn snapshot(&self) -> Vec<ConceptCluster> {
        self.clusters.values().cloned().collect()
    }

    /// Membership partition as sorted sets of `lang:title` keys.
    pub fn partition(&self) -> BTreeSet<BTreeSet<String>> {
        self.clusters
            .values()
            .map(|c| c.all_members().map(ArticleRef::key).collect())
            .collect()
    }

    fn next_generation(&mut self, key: &str) -> u32 {
        let g = self.generations.entry(key.to_owned()).or_insert(0);
        *g += 1;
        *g
    }

    pub fn upsert_edit(
        &mut self,
        event: &EditEvent,
        resolver: &dyn LanglinkResolver,
    ) -> UpsertOutcome {
        let article = ArticleRef::new(event.language.clone(), &event.title);
        let edit = EditRecord {
            timestamp: event.timestamp,
            editor: event.editor.clone(),
            language: article.language.clone(),
            title: article.title.clone(),
        };
        self.edit_count += 1;

        let equivalents = resolve_equivalents(&article, resolver);
        let hits: BTreeSet<String> = equivalents
            .iter()
            .filter_map(|r| self.index.get(r).cloned())
            .collect();

        if hits.is_empty() {
            let key = article.key();
            let generation = self.next_generation(&key);
            let cluster = ConceptCluster {
                id: key.clone(),
                generation,
                members: BTreeSet::from([article.clone()]),
                aliases: BTreeSet::new(),
                edits: vec![edit],
                first_seen: event.timestamp,
                last_seen: event.timestamp,
                ttl_deadline: event.timestamp + self.ttl,
            };
            self.index.insert(article, key.clone());
            self.clusters.insert(key.clone(), cluster);
            return UpsertOutcome {
                id: key,
                is_new: true,
                previous_ids: Vec::new(),
            };
        }

        let previous_ids: Vec<String> = hits.iter().cloned().collect();
        let mut parts: Vec<ConceptCluster> = previous_ids
            .iter()
            .filter_map(|k| self.clusters.remove(k))
            .collect();
        let generations_before: HashMap<String, u32> =
            parts.iter().map(|p| (p.id.clone(), p.generation)).collect();
        let mut merged = parts.remove(0);
        for part in parts {
            merged.members.extend(part.members);
            merged.aliases.extend(part.aliases);
            merged.edits.extend(part.edits);
            merged.first_seen = merged.first_seen.min(part.first_seen);
            merged.last_seen = merged.last_seen.max(part.last_seen);
        }
        merged.edits.sort_by_key(|e| e.timestamp);
        merged.insert_edit(edit);
        if !merged.contains(&article) {
            merged.members.insert(article);
        }
        merged.first_seen = merged.first_seen.min(event.timestamp);
        merged.last_seen = merged.last_seen.max(event.timestamp);
        merged.ttl_deadline = merged.last_seen + self.ttl;

        let new_key = cluster_key(merged.all_members()).expect("cluster has members");
        merged.generation = match generations_before.get(&new_key) {
            Some(&g) => g,
            None => self.next_generation(&new_key),
        };
        merged.id = new_key.clone();
        merged.reassign_primaries();

        for old in &previous_ids {
            if *old != new_key {
                self.aliases.insert(old.clone(), new_key.clone());
            }
        }
        for target in self.aliases.values_mut() {
            if previous_ids.contains(target) {
                *target = new_key.clone();
            }
        }
        self.aliases.remove(&new_key);
        for r in merged.all_members() {
            self.index.insert(r.clone(), new_key.clone());
        }
        self.clusters.insert(new_key.clone(), merged);

        UpsertOutcome {
            id: new_key,
            is_new: false,
            previous_ids,
        }
    }

    /// Drops every cluster whose TTL deadline is at or before `now`.
    pub fn expire(&mut self, now: i64) -> Vec<String> {
        let expired: Vec<String> = self
            .clusters
            .iter()
            .filter(|(_, c)| c.ttl_deadline <= now)
            .map(|(k, _)| k.clone())
            .collect();
        for key in &expired {
            if let Some(c) = self.clusters.remove(key) {
                for r in c.all_members() {
                    self.index.remove(r);
                }
            }
        }
        if !expired.is_empty() {
            self.aliases.retain(|_, target| !expired.contains(target));
        }
        expired
    }
}
