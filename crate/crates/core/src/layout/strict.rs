use crate::error::{Error, Result};
use crate::media_ingest::MediaItem;

use super::{GalleryKind, LayoutSpec, MediaGallery, PlacedItem, Rect};

/// Justified rows: items are added at the maximum row height until the row
/// (with gutters) reaches the gallery width, then the row is scaled down
/// uniformly to span it exactly. A trailing underfull row keeps the maximum
/// height and stays left-aligned.
pub fn layout_strict(items: &[MediaItem], spec: &LayoutSpec) -> Result<MediaGallery> {
    spec.validate()?;
    if items.is_empty() {
        return Err(Error::InvalidArgument(
            "strict layout needs at least one item".into(),
        ));
    }
    let width = spec.width();
    let gutter = spec.gutter();
    let hmax = f64::from(spec.max_row_height_px);

    let mut placed = Vec::with_capacity(items.len());
    let mut y = 0.0;
    let mut row_start = 0;
    let mut row_width = 0.0;
    let mut bottom = 0.0;
    let mut row = 0;

    for (i, item) in items.iter().enumerate() {
        if item.width_px == 0 || item.height_px == 0 {
            return Err(Error::InvalidArgument(format!(
                "{}: zero dimension",
                item.item_id
            )));
        }
        row_width += item.aspect() * hmax;
        let gutters = (i - row_start) as f64 * gutter;
        if row_width + gutters < width {
            continue;
        }
        let scale = (width - gutters) / row_width;
        if scale <= 0.0 {
            return Err(Error::InvalidSpec(
                "gutters alone exceed the gallery width".into(),
            ));
        }
        let h = hmax * scale;
        place_row(&items[row_start..=i], row, y, h, gutter, &mut placed);
        bottom = y + h;
        y = bottom + gutter;
        row += 1;
        row_start = i + 1;
        row_width = 0.0;
    }
    if row_start < items.len() {
        place_row(&items[row_start..], row, y, hmax, gutter, &mut placed);
        bottom = y + hmax;
    }

    Ok(MediaGallery {
        kind: GalleryKind::StrictOrderEqualSize,
        spec: *spec,
        placed,
        bounds_w: width,
        bounds_h: bottom,
        omitted: Vec::new(),
        best_effort: false,
    })
}

fn place_row(
    items: &[MediaItem],
    row: usize,
    y: f64,
    h: f64,
    gutter: f64,
    out: &mut Vec<PlacedItem>,
) {
    let mut x = 0.0;
    for item in items {
        let w = item.aspect() * h;
        out.push(PlacedItem {
            item: item.clone(),
            rect: Rect { x, y, w, h },
            crop: None,
            prominent: false,
            group: row,
        });
        x += w + gutter;
    }
}
