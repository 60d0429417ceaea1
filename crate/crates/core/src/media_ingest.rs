//! Social media candidates for a breaking-news event: the connector
//! contract, a file-backed fixture connector and full-phrase relevance
//! filtering.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{fold, is_word_char, slugify};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Photo,
    Video,
}

/// Interaction counts unified across networks; absent counts are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct SocialSignals {
    pub likes: u64,
    pub shares: u64,
    pub comments: u64,
    pub views: u64,
}

impl SocialSignals {
    pub fn new(likes: u64, shares: u64, comments: u64, views: u64) -> Self {
        Self {
            likes,
            shares,
            comments,
            views,
        }
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.likes, self.shares, self.comments, self.views]
    }

    pub fn saturating_add(self, other: Self) -> Self {
        Self {
            likes: self.likes.saturating_add(other.likes),
            shares: self.shares.saturating_add(other.shares),
            comments: self.comments.saturating_add(other.comments),
            views: self.views.saturating_add(other.views),
        }
    }

    /// Field-wise `>=`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .all(|(a, b)| *a >= b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MediaItem {
    /// `<network>:<native id>`.
    pub item_id: String,
    pub network: String,
    pub kind: MediaKind,
    pub media_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poster_url: Option<String>,
    pub width_px: u32,
    pub height_px: u32,
    pub micropost_text: String,
    pub micropost_url: String,
    #[serde(default)]
    pub author: String,
    pub published_at: i64,
    #[serde(default)]
    pub signals: SocialSignals,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    /// Local raster (the poster frame for videos), when one is available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_file: Option<PathBuf>,
}

impl MediaItem {
    pub fn aspect(&self) -> f64 {
        f64::from(self.width_px) / f64::from(self.height_px)
    }

    pub fn is_video(&self) -> bool {
        self.kind == MediaKind::Video
    }

    /// Text matched against search terms: the micropost followed by its tags.
    pub fn relevance_text(&self) -> String {
        if self.tags.is_empty() {
            return self.micropost_text.clone();
        }
        let mut text = self.micropost_text.clone();
        for tag in &self.tags {
            text.push(' ');
            text.push_str(tag);
        }
        text
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidArgument(format!(
                "{}: zero dimension",
                self.item_id
            )));
        }
        if self.is_video() && self.poster_url.is_none() {
            return Err(Error::InvalidArgument(format!(
                "{}: video without poster",
                self.item_id
            )));
        }
        if self.micropost_url.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}: missing micropost url",
                self.item_id
            )));
        }
        Ok(())
    }
}

pub trait Connector: Send + Sync {
    fn name(&self) -> &str;
    fn search(&self, term: &str) -> Result<Vec<MediaItem>>;
}

impl<C: Connector + ?Sized> Connector for Box<C> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn search(&self, term: &str) -> Result<Vec<MediaItem>> {
        (**self).search(term)
    }
}

/// On-disk record read by [`FixtureConnector`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureRecord {
    pub native_id: String,
    pub kind: MediaKind,
    pub media_url: String,
    #[serde(default)]
    pub poster_url: Option<String>,
    #[serde(default)]
    pub width_px: Option<u32>,
    #[serde(default)]
    pub height_px: Option<u32>,
    pub micropost_text: String,
    pub micropost_url: String,
    #[serde(default)]
    pub author: String,
    pub published_at: i64,
    #[serde(default)]
    pub signals: SocialSignals,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Image path relative to the connector directory.
    #[serde(default)]
    pub file: Option<String>,
}

/// Reads `<dir>/<slug(term)>.json`, a JSON array of [`FixtureRecord`]s. A
/// term without a file yields no items.
#[derive(Clone, Debug)]
pub struct FixtureConnector {
    name: String,
    dir: PathBuf,
}

impl FixtureConnector {
    pub fn new(name: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            dir: dir.into(),
        }
    }

    pub fn file_for_term(&self, term: &str) -> PathBuf {
        let slug = slugify(term, 80).unwrap_or_else(|| "untitled".to_owned());
        self.dir.join(format!("{slug}.json"))
    }

    fn to_item(&self, rec: FixtureRecord) -> Option<MediaItem> {
        let local_file = rec.file.as_ref().map(|f| self.dir.join(f));
        let (width_px, height_px) = match (rec.width_px, rec.height_px, &local_file) {
            (Some(w), Some(h), _) if w > 0 && h > 0 => (w, h),
            (_, _, Some(path)) => match image::image_dimensions(path) {
                Ok(dims) => dims,
                Err(e) => {
                    log::warn!(
                        "{}:{}: no dimensions ({e}); dropped",
                        self.name,
                        rec.native_id
                    );
                    return None;
                }
            },
            _ => {
                log::warn!("{}:{}: no dimensions; dropped", self.name, rec.native_id);
                return None;
            }
        };
        let item = MediaItem {
            item_id: format!("{}:{}", self.name, rec.native_id),
            network: self.name.clone(),
            kind: rec.kind,
            media_url: rec.media_url,
            poster_url: rec.poster_url,
            width_px,
            height_px,
            micropost_text: rec.micropost_text,
            micropost_url: rec.micropost_url,
            author: rec.author,
            published_at: rec.published_at,
            signals: rec.signals,
            tags: rec.tags,
            local_file,
        };
        match item.validate() {
            Ok(()) => Some(item),
            Err(e) => {
                log::warn!("{e}; dropped");
                None
            }
        }
    }
}

impl Connector for FixtureConnector {
    fn name(&self) -> &str {
        &self.name
    }

    fn search(&self, term: &str) -> Result<Vec<MediaItem>> {
        let path = self.file_for_term(term);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let records: Vec<FixtureRecord> =
            serde_json::from_str(&text).map_err(|e| Error::Connector {
                connector: self.name.clone(),
                reason: format!("{}: {e}", path.display()),
            })?;
        Ok(records
            .into_iter()
            .filter_map(|r| self.to_item(r))
            .collect())
    }
}

fn canonical(s: &str) -> String {
    fold(s).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Full-phrase, Unicode-aware relevance test. Both sides are NFC-normalized,
/// case-folded and whitespace-collapsed; the phrase must occur contiguously
/// with no letter or digit directly before or after it.
pub fn matches_phrase(text: &str, phrase: &str) -> Result<bool> {
    let phrase = canonical(phrase);
    if phrase.is_empty() {
        return Err(Error::InvalidArgument("empty search phrase".into()));
    }
    let text = canonical(text);
    let mut from = 0;
    while let Some(pos) = text[from..].find(&phrase) {
        let start = from + pos;
        let end = start + phrase.len();
        let before_ok = text[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !is_word_char(c));
        let after_ok = text[end..].chars().next().is_none_or(|c| !is_word_char(c));
        if before_ok && after_ok {
            return Ok(true);
        }
        from = start + text[start..].chars().next().map_or(1, char::len_utf8);
    }
    Ok(false)
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Upper bound on concurrently running `(connector, term)` queries.
    pub max_concurrency: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_concurrency: 8 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchOutcome {
    /// Relevant items sorted by `(network, item_id)`.
    pub items: Vec<MediaItem>,
    /// Set when there were no connectors or every query failed.
    pub degraded: bool,
    pub failed_queries: usize,
}

/// Queries every `(connector, term)` pair, keeps items that match at least
/// one term as a full phrase and drops exact `item_id` / `media_url`
/// duplicates.
pub fn search_media<C: Connector>(
    terms: &[String],
    connectors: &[C],
    options: SearchOptions,
) -> Result<SearchOutcome> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument(
            "search_media needs at least one term".into(),
        ));
    }
    let jobs: Vec<(usize, &str)> = (0..connectors.len())
        .flat_map(|c| terms.iter().map(move |t| (c, t.as_str())))
        .collect();
    if jobs.is_empty() {
        return Ok(SearchOutcome {
            degraded: true,
            ..SearchOutcome::default()
        });
    }

    let results: Mutex<Vec<Option<Result<Vec<MediaItem>>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = options.max_concurrency.clamp(1, jobs.len());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, term)) = jobs.get(i) else { break };
                let found = connectors[c].search(term);
                results.lock().expect("search results lock")[i] = Some(found);
            });
        }
    });

    let mut failed_queries = 0;
    let mut all = Vec::new();
    for (slot, &(c, term)) in results
        .into_inner()
        .expect("search results lock")
        .into_iter()
        .zip(&jobs)
    {
        match slot {
            Some(Ok(items)) => all.extend(items),
            Some(Err(e)) => {
                failed_queries += 1;
                log::warn!(
                    "connector {} failed for {term:?}: {e}",
                    connectors[c].name()
                );
            }
            None => failed_queries += 1,
        }
    }

    let folded_terms: Vec<&String> = terms.iter().filter(|t| !t.trim().is_empty()).collect();
    all.retain(|item| {
        let text = item.relevance_text();
        folded_terms
            .iter()
            .any(|t| matches_phrase(&text, t).unwrap_or(false))
    });
    all.sort_by(|a, b| (&a.network, &a.item_id).cmp(&(&b.network, &b.item_id)));
    let mut seen_ids = std::collections::HashSet::new();
    let mut seen_urls = std::collections::HashSet::new();
    all.retain(|item| {
        seen_ids.insert(item.item_id.clone()) & seen_urls.insert(item.media_url.clone())
    });

    Ok(SearchOutcome {
        items: all,
        degraded: failed_queries == jobs.len(),
        failed_queries,
    })
}

/// Loads a JSON array of [`MediaItem`]s (the `layout` debug input).
pub fn load_items(path: &Path) -> Result<Vec<MediaItem>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
