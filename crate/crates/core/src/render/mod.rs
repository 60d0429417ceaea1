//! Gallery output: HTML fragments, deterministic PNG dumps with attribution
//! lines, and the dated archive layout.

mod font;
mod html;
mod png;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{GalleryKind, MediaGallery};
use crate::text::slugify;

pub use font::{glyph, GLYPH_H, GLYPH_W};
pub use html::{emit_html, escape, px};
pub use png::{compose, compose_png, dump_dimensions, encode_png};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub border_px: u32,
    pub attribution_line_height_px: u32,
    pub background_color: [u8; 3],
    pub border_color: [u8; 3],
    pub text_color: [u8; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            border_px: 1,
            attribution_line_height_px: 14,
            background_color: [255, 255, 255],
            border_color: [204, 204, 204],
            text_color: [0, 0, 0],
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.border_px == 0 || self.attribution_line_height_px == 0 {
            return Err(Error::Config(
                "border and attribution line height must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub const SLUG_MAX_CHARS: usize = 80;

/// `{kind}_{slug of the first term}_{unix_ts}.png`.
pub fn archive_path(kind: GalleryKind, terms: &[String], unix_ts: i64) -> Result<String> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidArgument("archive_path needs at least one term".into()))?;
    let slug = slugify(first, SLUG_MAX_CHARS).unwrap_or_else(|| "untitled".to_owned());
    Ok(format!("{kind}_{slug}_{unix_ts}.png"))
}

/// `YYYY-MM-DD` (UTC) directory for a timestamp.
pub fn archive_day(unix_ts: i64) -> Result<String> {
    let dt = DateTime::from_timestamp(unix_ts, 0)
        .ok_or_else(|| Error::InvalidArgument(format!("timestamp {unix_ts} out of range")))?;
    Ok(dt.format("%Y-%m-%d").to_string())
}

/// Full archive location below `root`: `root/YYYY-MM-DD/<archive_path>`.
pub fn archive_file(
    root: &Path,
    kind: GalleryKind,
    terms: &[String],
    unix_ts: i64,
) -> Result<PathBuf> {
    Ok(root
        .join(archive_day(unix_ts)?)
        .join(archive_path(kind, terms, unix_ts)?))
}

/// Writes via a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Decodes every placed item's local raster; items without one are skipped.
pub fn load_rasters(g: &MediaGallery) -> std::collections::HashMap<String, image::RgbImage> {
    g.placed
        .iter()
        .filter_map(|p| {
            let path = p.item.local_file.as_ref()?;
            match image::open(path) {
                Ok(img) => Some((p.item.item_id.clone(), img.to_rgb8())),
                Err(e) => {
                    log::warn!("cannot decode {}: {e}", path.display());
                    None
                }
            }
        })
        .collect()
}
