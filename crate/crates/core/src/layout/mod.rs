//! Gallery geometry: justified rows ("strict order, equal size"), square
//! mosaics ("loose order, varying size"), the aesthetic predicates and the
//! balancing search.

mod balance;
mod check;
mod loose;
mod strict;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dedup_rank::{rank_score, RankWeights};
use crate::error::{Error, Result};
use crate::media_ingest::MediaItem;

pub use balance::{balance_gallery, DEFAULT_MAX_STEPS};
pub use check::{check_aesthetics, column_heights, hole_free, Aesthetics};
pub use loose::{layout_loose, loose_geometry, LooseGeometry, MIN_SMALL_SIDE_PX};
pub use strict::layout_strict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GalleryKind {
    #[serde(rename = "strict-order-equal-size")]
    StrictOrderEqualSize,
    #[serde(rename = "loose-order-varying-size")]
    LooseOrderVaryingSize,
}

impl GalleryKind {
    pub const ALL: [GalleryKind; 2] = [
        GalleryKind::StrictOrderEqualSize,
        GalleryKind::LooseOrderVaryingSize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GalleryKind::StrictOrderEqualSize => "strict-order-equal-size",
            GalleryKind::LooseOrderVaryingSize => "loose-order-varying-size",
        }
    }
}

impl fmt::Display for GalleryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GalleryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" | "strict-order-equal-size" => Ok(GalleryKind::StrictOrderEqualSize),
            "loose" | "loose-order-varying-size" => Ok(GalleryKind::LooseOrderVaryingSize),
            _ => Err(Error::InvalidArgument(format!(
                "unknown gallery kind {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSpec {
    pub gallery_width_px: u32,
    pub max_row_height_px: u32,
    pub columns: u32,
    pub gutter_px: u32,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        Self {
            gallery_width_px: 602,
            max_row_height_px: 200,
            columns: 3,
            gutter_px: 2,
        }
    }
}

impl LayoutSpec {
    pub fn new(
        gallery_width_px: u32,
        max_row_height_px: u32,
        columns: u32,
        gutter_px: u32,
    ) -> Self {
        Self {
            gallery_width_px,
            max_row_height_px,
            columns,
            gutter_px,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gallery_width_px == 0 || self.max_row_height_px == 0 {
            return Err(Error::InvalidSpec(
                "width and row height must be positive".into(),
            ));
        }
        if self.columns == 0 {
            return Err(Error::InvalidSpec("columns must be at least 1".into()));
        }
        if u64::from(self.gallery_width_px) * 4 < u64::from(self.max_row_height_px) {
            return Err(Error::InvalidSpec(
                "gallery narrower than a quarter of the row height".into(),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        f64::from(self.gallery_width_px)
    }

    pub fn gutter(&self) -> f64 {
        f64::from(self.gutter_px)
    }
}

/// Centered square region of the source raster, in source pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crop {
    pub x: u32,
    pub y: u32,
    pub side: u32,
}

impl Crop {
    pub fn centered(width_px: u32, height_px: u32) -> Self {
        let side = width_px.min(height_px);
        Self {
            x: (width_px - side) / 2,
            y: (height_px - side) / 2,
            side,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

/// An item together with its prominence flag (big square in the loose kind).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutItem {
    pub item: MediaItem,
    pub prominent: bool,
}

impl LayoutItem {
    pub fn new(item: MediaItem, prominent: bool) -> Self {
        Self { item, prominent }
    }

    pub fn zip(items: &[MediaItem], flags: &[bool]) -> Vec<LayoutItem> {
        items
            .iter()
            .zip(flags)
            .map(|(i, p)| LayoutItem::new(i.clone(), *p))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlacedItem {
    pub item: MediaItem,
    pub rect: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<Crop>,
    pub prominent: bool,
    /// Row index (strict kind) or unit index in emission order (loose kind).
    pub group: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MediaGallery {
    pub kind: GalleryKind,
    pub spec: LayoutSpec,
    /// Placed items in input order.
    pub placed: Vec<PlacedItem>,
    pub bounds_w: f64,
    pub bounds_h: f64,
    pub omitted: Vec<MediaItem>,
    /// Set by [`balance_gallery`] when no candidate satisfied every principle.
    #[serde(default)]
    pub best_effort: bool,
}

impl MediaGallery {
    pub fn empty(kind: GalleryKind, spec: LayoutSpec) -> Self {
        Self {
            kind,
            spec,
            placed: Vec::new(),
            bounds_w: spec.width(),
            bounds_h: 0.0,
            omitted: Vec::new(),
            best_effort: false,
        }
    }

    pub fn len(&self) -> usize {
        self.placed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placed.is_empty()
    }

    pub fn item_ids(&self) -> Vec<&str> {
        self.placed
            .iter()
            .map(|p| p.item.item_id.as_str())
            .collect()
    }
}

/// Lays out `items` as the given kind (prominence is ignored by the strict kind).
pub fn layout(kind: GalleryKind, items: &[LayoutItem], spec: &LayoutSpec) -> Result<MediaGallery> {
    let media: Vec<MediaItem> = items.iter().map(|l| l.item.clone()).collect();
    match kind {
        GalleryKind::StrictOrderEqualSize => layout_strict(&media, spec),
        GalleryKind::LooseOrderVaryingSize => {
            let flags: Vec<bool> = items.iter().map(|l| l.prominent).collect();
            layout_loose(&media, &flags, spec)
        }
    }
}

/// Smallest photo side that counts as high quality.
pub const PROMINENT_MIN_SIDE_PX: u32 = 640;

/// Videos are always featured; photos are featured when their score is in
/// the top quartile of the set (ties included) and both sides are at least
/// [`PROMINENT_MIN_SIDE_PX`].
pub fn classify_prominent(items: &[MediaItem], weights: &RankWeights) -> Vec<bool> {
    if items.is_empty() {
        return Vec::new();
    }
    let scores: Vec<f64> = items
        .iter()
        .map(|i| rank_score(&i.signals, weights))
        .collect();
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let quartile = items.len().div_ceil(4);
    let threshold = sorted[quartile - 1];
    items
        .iter()
        .zip(&scores)
        .map(|(item, score)| {
            item.is_video()
                || (*score >= threshold
                    && item.width_px.min(item.height_px) >= PROMINENT_MIN_SIDE_PX)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::media_ingest::tests::item;
    use crate::media_ingest::{MediaKind, SocialSignals};

    pub(crate) fn sized(id: usize, w: u32, h: u32) -> MediaItem {
        let mut it = item(&format!("n:{id:03}"), "x");
        it.width_px = w;
        it.height_px = h;
        it
    }

    /// Items with the given aspect ratios, 1000 px tall.
    pub(crate) fn with_aspects(aspects: &[f64]) -> Vec<MediaItem> {
        aspects
            .iter()
            .enumerate()
            .map(|(i, a)| sized(i, (a * 1000.0).round() as u32, 1000))
            .collect()
    }

    #[test]
    fn kind_names() {
        assert_eq!(
            GalleryKind::StrictOrderEqualSize.to_string(),
            "strict-order-equal-size"
        );
        assert_eq!(
            "loose".parse::<GalleryKind>().unwrap(),
            GalleryKind::LooseOrderVaryingSize
        );
        assert_eq!(
            serde_json::to_string(&GalleryKind::LooseOrderVaryingSize).unwrap(),
            "\"loose-order-varying-size\""
        );
        assert!("other".parse::<GalleryKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(LayoutSpec::default().validate().is_ok());
        assert!(LayoutSpec::new(0, 10, 1, 0).validate().is_err());
        assert!(LayoutSpec::new(10, 41, 1, 0).validate().is_err());
        assert!(LayoutSpec::new(10, 40, 0, 0).validate().is_err());
    }

    #[test]
    fn centered_crop() {
        assert_eq!(
            Crop::centered(1920, 1080),
            Crop {
                x: 420,
                y: 0,
                side: 1080
            }
        );
        assert_eq!(
            Crop::centered(5, 8),
            Crop {
                x: 0,
                y: 1,
                side: 5
            }
        );
    }

    #[test]
    fn prominence_examples() {
        let w = RankWeights::default();
        let mut video = sized(0, 320, 240);
        video.kind = MediaKind::Video;
        video.poster_url = Some("p".into());
        assert_eq!(classify_prominent(&[video], &w), vec![true]);

        let low: Vec<MediaItem> = (0..4).map(|i| sized(i, 320, 240)).collect();
        assert_eq!(classify_prominent(&low, &w), vec![false; 4]);

        let mut eight: Vec<MediaItem> = (0..8).map(|i| sized(i, 800, 600)).collect();
        for (i, it) in eight.iter_mut().enumerate() {
            it.signals = SocialSignals::new(i as u64, 0, 0, 0);
            it.width_px = 480;
        }
        eight[7].width_px = 1080;
        eight[7].height_px = 1080;
        let flags = classify_prominent(&eight, &w);
        assert_eq!(flags.iter().filter(|f| **f).count(), 1);
        assert!(flags[7]);
        assert!(classify_prominent(&[], &w).is_empty());
    }

    #[test]
    fn quartile_includes_ties() {
        let w = RankWeights::default();
        let mut items: Vec<MediaItem> = (0..5).map(|i| sized(i, 1000, 700)).collect();
        for it in items.iter_mut().take(3) {
            it.signals = SocialSignals::new(9, 0, 0, 0);
        }
        assert_eq!(
            classify_prominent(&items, &w),
            vec![true, true, true, false, false]
        );
    }
}
