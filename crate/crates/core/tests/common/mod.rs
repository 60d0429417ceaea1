#![allow(dead_code)]

use std::path::PathBuf;

use newsgallery_core::layout::{GalleryKind, MediaGallery};
use newsgallery_core::media_ingest::{MediaItem, MediaKind, SocialSignals};
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn photo(id: usize, width_px: u32, height_px: u32) -> MediaItem {
    MediaItem {
        item_id: format!("t:{id:04}"),
        network: "t".into(),
        kind: MediaKind::Photo,
        media_url: format!("https://t.example/m/{id}"),
        poster_url: None,
        width_px,
        height_px,
        micropost_text: String::new(),
        micropost_url: format!("https://t.example/p/{id}"),
        author: String::new(),
        published_at: id as i64,
        signals: SocialSignals::default(),
        tags: Vec::new(),
        local_file: None,
    }
}

/// Photos with aspect ratios drawn log-uniformly from [1/4, 4].
pub fn random_photos<R: Rng>(rng: &mut R, n: usize) -> Vec<MediaItem> {
    (0..n)
        .map(|i| {
            let aspect = 4f64.powf(rng.random_range(-1.0..=1.0));
            let h = rng.random_range(100..=2000u32);
            let w = ((f64::from(h) * aspect).round() as u32).max(1);
            photo(i, w, h)
        })
        .collect()
}

/// Largest pairwise overlap area between placed rectangles.
pub fn max_overlap(g: &MediaGallery) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in g.placed.iter().enumerate() {
        for b in &g.placed[i + 1..] {
            worst = worst.max(a.rect.intersection_area(&b.rect));
        }
    }
    worst
}

pub fn within_bounds(g: &MediaGallery) -> bool {
    g.placed.iter().all(|p| {
        p.rect.x >= -1e-6
            && p.rect.y >= -1e-6
            && p.rect.right() <= g.bounds_w + 1e-6
            && p.rect.bottom() <= g.bounds_h + 1e-6
    })
}

/// Independent shortest-column replay of a loose gallery: units in emission
/// order must land in the then-shortest column (leftmost on ties), directly
/// below that column's previous unit.
pub fn shortest_column_respected(g: &MediaGallery) -> Result<(), String> {
    assert_eq!(g.kind, GalleryKind::LooseOrderVaryingSize);
    let c = f64::from(g.spec.columns);
    let gutter = f64::from(g.spec.gutter_px);
    let small = (f64::from(g.spec.gallery_width_px) - (2.0 * c - 1.0) * gutter) / (2.0 * c);
    let big = 2.0 * small + gutter;
    let mut units: std::collections::BTreeMap<usize, (f64, f64, f64, f64)> = Default::default();
    for p in &g.placed {
        let e = units.entry(p.group).or_insert((
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ));
        e.0 = e.0.min(p.rect.x);
        e.1 = e.1.min(p.rect.y);
        e.2 = e.2.max(p.rect.right());
        e.3 = e.3.max(p.rect.bottom());
    }
    let mut heights = vec![0.0f64; g.spec.columns as usize];
    for (expected_group, (group, (x0, y0, x1, y1))) in units.into_iter().enumerate() {
        if group != expected_group {
            return Err(format!("unit {expected_group} missing"));
        }
        if ((x1 - x0) - big).abs() > 1e-6 || ((y1 - y0) - big).abs() > 1e-6 {
            return Err(format!(
                "unit {group} is {}x{}, expected {big}",
                x1 - x0,
                y1 - y0
            ));
        }
        let mut col = 0;
        for (i, h) in heights.iter().enumerate() {
            if *h < heights[col] {
                col = i;
            }
        }
        let want_x = col as f64 * (big + gutter);
        let want_y = if heights[col] > 0.0 {
            heights[col] + gutter
        } else {
            0.0
        };
        if (x0 - want_x).abs() > 1e-6 || (y0 - want_y).abs() > 1e-6 {
            return Err(format!(
                "unit {group} at ({x0}, {y0}), shortest column puts it at ({want_x}, {want_y})"
            ));
        }
        heights[col] = want_y + big;
    }
    Ok(())
}
