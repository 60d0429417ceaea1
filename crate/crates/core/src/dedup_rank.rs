//! Exact and near-duplicate collapsing via coarse colour tile signatures,
//! and log-damped ranking by merged social signals.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;
use std::thread;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media_ingest::{MediaItem, SocialSignals};
use crate::union_find::DisjointSet;

/// Side length, in resampled pixels, of one tile.
pub const TILE_PX: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    /// Tiles per side.
    pub grid: u32,
    /// Largest per-channel difference of two tile means that still agrees.
    pub tile_tolerance: f64,
    /// Fraction of tiles that must agree.
    pub tile_agreement: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            grid: 10,
            tile_tolerance: 24.0,
            tile_agreement: 0.9,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 {
            return Err(Error::Config("dedup grid must be positive".into()));
        }
        if self.tile_tolerance.is_nan() || self.tile_tolerance < 0.0 {
            return Err(Error::Config(
                "dedup tile tolerance must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.tile_agreement) {
            return Err(Error::Config(
                "dedup tile agreement must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    fn required_agreeing_tiles(&self) -> usize {
        let n = (self.grid * self.grid) as f64;
        (self.tile_agreement * n - 1e-9).ceil().max(0.0) as usize
    }
}

/// Per-tile mean colour of an image resampled to `grid·10` pixels square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TileSignature {
    pub grid: u32,
    /// Row-major tile means, each channel in `[0, 255]`.
    pub tiles: Vec<[f64; 3]>,
    pub source_dims: (u32, u32),
}

impl TileSignature {
    pub fn tile(&self, row: u32, col: u32) -> [f64; 3] {
        self.tiles[(row * self.grid + col) as usize]
    }

    /// Largest per-channel absolute difference for each tile pair.
    pub fn tile_distances(&self, other: &TileSignature) -> Vec<f64> {
        self.tiles
            .iter()
            .zip(&other.tiles)
            .map(|(a, b)| (0..3).map(|c| (a[c] - b[c]).abs()).fold(0.0, f64::max))
            .collect()
    }
}

/// Bilinear sample of `img` at continuous pixel coordinates, edges clamped.
fn sample(img: &RgbImage, sx: f64, sy: f64) -> [f64; 3] {
    let (w, h) = img.dimensions();
    let clamp = |v: f64, hi: u32| v.clamp(0.0, f64::from(hi - 1));
    let (sx, sy) = (clamp(sx, w), clamp(sy, h));
    let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (sx - f64::from(x0), sy - f64::from(y0));
    let px = |x, y| img.get_pixel(x, y).0;
    let (p00, p10, p01, p11) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
        let bottom = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
        *slot = top * (1.0 - fy) + bottom * fy;
    }
    out
}

/// Pixel-centre aligned bilinear resample to `out_w × out_h`.
pub fn resample_bilinear(img: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    let sx_scale = f64::from(w) / f64::from(out_w);
    let sy_scale = f64::from(h) / f64::from(out_h);
    RgbImage::from_fn(out_w, out_h, |x, y| {
        let v = sample(
            img,
            (f64::from(x) + 0.5) * sx_scale - 0.5,
            (f64::from(y) + 0.5) * sy_scale - 0.5,
        );
        image::Rgb(v.map(|c| c.round().clamp(0.0, 255.0) as u8))
    })
}

/// Returns `None` (signature unavailable) for images smaller than the grid.
pub fn tile_signature(img: &RgbImage, grid: u32) -> Option<TileSignature> {
    let (w, h) = img.dimensions();
    if grid == 0 || w < grid || h < grid {
        return None;
    }
    let side = grid * TILE_PX;
    let sx_scale = f64::from(w) / f64::from(side);
    let sy_scale = f64::from(h) / f64::from(side);
    let mut sums = vec![[0.0f64; 3]; (grid * grid) as usize];
    for y in 0..side {
        let sy = (f64::from(y) + 0.5) * sy_scale - 0.5;
        for x in 0..side {
            let v = sample(img, (f64::from(x) + 0.5) * sx_scale - 0.5, sy);
            let tile = &mut sums[((y / TILE_PX) * grid + x / TILE_PX) as usize];
            for c in 0..3 {
                tile[c] += v[c];
            }
        }
    }
    let n = f64::from(TILE_PX * TILE_PX);
    let tiles = sums
        .into_iter()
        .map(|t| t.map(|s| (s / n).clamp(0.0, 255.0)))
        .collect();
    Some(TileSignature {
        grid,
        tiles,
        source_dims: (w, h),
    })
}

/// Decodes the item's local raster (the poster frame for videos).
pub fn signature_for_file(path: &Path, grid: u32) -> Option<TileSignature> {
    match image::open(path) {
        Ok(img) => tile_signature(&img.to_rgb8(), grid),
        Err(e) => {
            log::debug!("no signature for {}: {e}", path.display());
            None
        }
    }
}

/// Signatures for every item with a local raster, computed in parallel.
pub fn compute_signatures(items: &[MediaItem], cfg: &DedupConfig) -> Vec<Option<TileSignature>> {
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .clamp(1, 8);
    let chunk = items.len().div_ceil(workers).max(1);
    thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|it| {
                            it.local_file
                                .as_deref()
                                .and_then(|p| signature_for_file(p, cfg.grid))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("signature worker panicked"))
            .collect()
    })
}

pub fn is_near_duplicate(a: &TileSignature, b: &TileSignature) -> bool {
    is_near_duplicate_with(a, b, &DedupConfig::default())
}

pub fn is_near_duplicate_with(a: &TileSignature, b: &TileSignature, cfg: &DedupConfig) -> bool {
    if a.grid != b.grid {
        return false;
    }
    let agreeing = a
        .tile_distances(b)
        .into_iter()
        .filter(|d| *d <= cfg.tile_tolerance)
        .count();
    agreeing >= cfg.required_agreeing_tiles()
}

/// Weights for likes, shares, comments and views.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankWeights(pub [f64; 4]);

impl Default for RankWeights {
    fn default() -> Self {
        Self([1.0; 4])
    }
}

impl RankWeights {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "rank weights must be finite and non-negative".into(),
            ));
        }
        if self.0.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument("rank weights are all zero".into()));
        }
        Ok(())
    }
}

pub fn rank_score(signals: &SocialSignals, weights: &RankWeights) -> f64 {
    signals
        .as_array()
        .iter()
        .zip(weights.0)
        .map(|(s, w)| w * (*s as f64).ln_1p())
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DuplicateCluster {
    /// Members in input order.
    pub members: Vec<MediaItem>,
    pub representative: MediaItem,
    pub merged_signals: SocialSignals,
}

/// Higher score first, then earlier publication, then item id.
fn representative_order(a: &MediaItem, b: &MediaItem, weights: &RankWeights) -> Ordering {
    rank_score(&b.signals, weights)
        .total_cmp(&rank_score(&a.signals, weights))
        .then(a.published_at.cmp(&b.published_at))
        .then_with(|| a.item_id.cmp(&b.item_id))
}

/// Connected components of near-duplicate or same-`media_url` items.
/// `signatures[i]` belongs to `items[i]`; `None` only merges on the URL.
/// Clusters are ordered by their first member's input position.
pub fn cluster_duplicates(
    items: &[MediaItem],
    signatures: &[Option<TileSignature>],
    cfg: &DedupConfig,
    weights: &RankWeights,
) -> Result<Vec<DuplicateCluster>> {
    if items.len() != signatures.len() {
        return Err(Error::InvalidArgument(format!(
            "{} items but {} signatures",
            items.len(),
            signatures.len()
        )));
    }
    let mut sets = DisjointSet::new(items.len());
    let mut by_url: HashMap<&str, usize> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        if let Some(&j) = by_url.get(item.media_url.as_str()) {
            sets.union(i, j);
        } else {
            by_url.insert(&item.media_url, i);
        }
    }
    for i in 0..items.len() {
        let Some(a) = &signatures[i] else { continue };
        for (j, b) in signatures.iter().enumerate().skip(i + 1) {
            if let Some(b) = b {
                if is_near_duplicate_with(a, b, cfg) {
                    sets.union(i, j);
                }
            }
        }
    }
    let mut components = sets.components();
    for c in &mut components {
        c.sort_unstable();
    }
    components.sort_by_key(|c| c[0]);
    Ok(components
        .into_iter()
        .map(|idx| {
            let members: Vec<MediaItem> = idx.iter().map(|&i| items[i].clone()).collect();
            let representative = members
                .iter()
                .min_by(|a, b| representative_order(a, b, weights))
                .expect("component is non-empty")
                .clone();
            let merged_signals = members.iter().fold(SocialSignals::default(), |acc, m| {
                acc.saturating_add(m.signals)
            });
            DuplicateCluster {
                members,
                representative,
                merged_signals,
            }
        })
        .collect())
}

/// Representatives ordered by merged-signal score (descending), newer
/// publication first on ties, then item id. Each returned item carries its
/// cluster's merged signals.
pub fn rank_items(clusters: &[DuplicateCluster], weights: &RankWeights) -> Result<Vec<MediaItem>> {
    weights.validate()?;
    let mut scored: Vec<(f64, MediaItem)> = clusters
        .iter()
        .map(|c| {
            let mut rep = c.representative.clone();
            rep.signals = c.merged_signals;
            (rank_score(&c.merged_signals, weights), rep)
        })
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.total_cmp(sa)
            .then(b.published_at.cmp(&a.published_at))
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
    Ok(scored.into_iter().map(|(_, item)| item).collect())
}
