use crate::error::{Error, Result};
use crate::media_ingest::MediaItem;

use super::{Crop, GalleryKind, LayoutSpec, MediaGallery, PlacedItem, Rect};

/// Smallest admissible small-square side.
pub const MIN_SMALL_SIDE_PX: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LooseGeometry {
    pub small: f64,
    pub big: f64,
    pub gutter: f64,
    pub columns: u32,
}

impl LooseGeometry {
    pub fn column_x(&self, col: usize) -> f64 {
        col as f64 * (self.big + self.gutter)
    }

    pub fn column_of(&self, x: f64) -> usize {
        ((x + 1e-6) / (self.big + self.gutter)).floor().max(0.0) as usize
    }
}

/// Solves `W = columns·(2s + g) + (columns − 1)·g` for the small side `s`.
pub fn loose_geometry(spec: &LayoutSpec) -> Result<LooseGeometry> {
    spec.validate()?;
    let c = f64::from(spec.columns);
    let gutter = spec.gutter();
    let small = (spec.width() - (2.0 * c - 1.0) * gutter) / (2.0 * c);
    if small < MIN_SMALL_SIDE_PX {
        return Err(Error::InvalidSpec(format!(
            "{} columns leave {small:.2} px small squares in {} px",
            spec.columns, spec.gallery_width_px
        )));
    }
    Ok(LooseGeometry {
        small,
        big: 2.0 * small + gutter,
        gutter,
        columns: spec.columns,
    })
}

enum Unit {
    Big(usize),
    Block([usize; 4]),
}

/// Square mosaic: prominent items become big squares at once, the others
/// fill 2×2 blocks of small squares row by row; each finished unit drops
/// into the currently shortest column (leftmost on ties). A trailing partial
/// block promotes its first item to a big square and omits the rest.
pub fn layout_loose(
    items: &[MediaItem],
    prominent: &[bool],
    spec: &LayoutSpec,
) -> Result<MediaGallery> {
    if items.len() != prominent.len() {
        return Err(Error::InvalidArgument(format!(
            "{} items but {} prominence flags",
            items.len(),
            prominent.len()
        )));
    }
    let geo = loose_geometry(spec)?;
    for item in items {
        if item.width_px == 0 || item.height_px == 0 {
            return Err(Error::InvalidArgument(format!(
                "{}: zero dimension",
                item.item_id
            )));
        }
    }

    let mut units = Vec::new();
    let mut pending: Vec<usize> = Vec::with_capacity(4);
    for (i, &big) in prominent.iter().enumerate() {
        if big {
            units.push(Unit::Big(i));
            continue;
        }
        pending.push(i);
        if pending.len() == 4 {
            units.push(Unit::Block([
                pending[0], pending[1], pending[2], pending[3],
            ]));
            pending.clear();
        }
    }
    let mut omitted_idx = Vec::new();
    if let Some((&first, rest)) = pending.split_first() {
        units.push(Unit::Big(first));
        omitted_idx.extend_from_slice(rest);
    }

    let mut heights = vec![0.0f64; geo.columns as usize];
    let mut slots: Vec<Option<(Rect, bool, usize)>> = vec![None; items.len()];
    for (unit_no, unit) in units.iter().enumerate() {
        let col = shortest_column(&heights);
        let x0 = geo.column_x(col);
        let y0 = if heights[col] > 0.0 {
            heights[col] + geo.gutter
        } else {
            0.0
        };
        match unit {
            Unit::Big(i) => {
                slots[*i] = Some((
                    Rect {
                        x: x0,
                        y: y0,
                        w: geo.big,
                        h: geo.big,
                    },
                    true,
                    unit_no,
                ));
            }
            Unit::Block(members) => {
                let step = geo.small + geo.gutter;
                for (k, &i) in members.iter().enumerate() {
                    let (dx, dy) = ((k % 2) as f64 * step, (k / 2) as f64 * step);
                    let rect = Rect {
                        x: x0 + dx,
                        y: y0 + dy,
                        w: geo.small,
                        h: geo.small,
                    };
                    slots[i] = Some((rect, false, unit_no));
                }
            }
        }
        heights[col] = y0 + geo.big;
    }

    let placed = items
        .iter()
        .zip(slots)
        .filter_map(|(item, slot)| {
            slot.map(|(rect, prominent, group)| PlacedItem {
                item: item.clone(),
                rect,
                crop: Some(Crop::centered(item.width_px, item.height_px)),
                prominent,
                group,
            })
        })
        .collect();

    Ok(MediaGallery {
        kind: GalleryKind::LooseOrderVaryingSize,
        spec: *spec,
        placed,
        bounds_w: spec.width(),
        bounds_h: heights.iter().copied().fold(0.0, f64::max),
        omitted: omitted_idx.into_iter().map(|i| items[i].clone()).collect(),
        best_effort: false,
    })
}

fn shortest_column(heights: &[f64]) -> usize {
    let mut best = 0;
    for (i, h) in heights.iter().enumerate() {
        if *h < heights[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::tests::sized;
    use super::*;

    fn items(n: usize) -> Vec<MediaItem> {
        (0..n).map(|i| sized(i, 800, 600)).collect()
    }

    #[test]
    fn geometry() {
        let g = loose_geometry(&LayoutSpec::new(400, 200, 2, 0)).unwrap();
        assert_eq!((g.small, g.big), (100.0, 200.0));
        let g = loose_geometry(&LayoutSpec::new(604, 200, 3, 2)).unwrap();
        assert_eq!(g.small, 99.0);
        assert_eq!(g.big, 200.0);
        assert_eq!(g.column_x(2), 404.0);
        assert!(matches!(
            loose_geometry(&LayoutSpec::new(400, 100, 13, 0)),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn big_then_block() {
        let spec = LayoutSpec::new(400, 200, 2, 0);
        let g = layout_loose(&items(5), &[true, false, false, false, false], &spec).unwrap();
        let r: Vec<(f64, f64, f64)> = g
            .placed
            .iter()
            .map(|p| (p.rect.x, p.rect.y, p.rect.w))
            .collect();
        assert_eq!(
            r,
            vec![
                (0.0, 0.0, 200.0),
                (200.0, 0.0, 100.0),
                (300.0, 0.0, 100.0),
                (200.0, 100.0, 100.0),
                (300.0, 100.0, 100.0)
            ]
        );
        assert_eq!(g.bounds_h, 200.0);
        assert!(g.omitted.is_empty());
        assert!(g.placed.iter().all(|p| p.rect.w == p.rect.h));
        assert_eq!(
            g.placed[0].crop,
            Some(Crop {
                x: 100,
                y: 0,
                side: 600
            })
        );
    }

    #[test]
    fn empty_gallery() {
        let g = layout_loose(&[], &[], &LayoutSpec::new(400, 200, 2, 0)).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.bounds_h, 0.0);
    }

    #[test]
    fn flush_promotes_first_and_omits_rest() {
        let g = layout_loose(&items(3), &[false; 3], &LayoutSpec::new(400, 200, 2, 0)).unwrap();
        assert_eq!(g.placed.len(), 1);
        assert!(g.placed[0].prominent);
        assert_eq!(g.placed[0].rect.w, 200.0);
        let omitted: Vec<&str> = g.omitted.iter().map(|i| i.item_id.as_str()).collect();
        assert_eq!(omitted, vec!["n:001", "n:002"]);

        let g = layout_loose(&items(1), &[false], &LayoutSpec::new(400, 200, 2, 0)).unwrap();
        assert!(g.placed[0].prominent && g.omitted.is_empty());
    }

    #[test]
    fn units_go_to_shortest_column() {
        let spec = LayoutSpec::new(400, 200, 2, 2);
        let flags = [true, true, true, false, false, false, false];
        let g = layout_loose(&items(7), &flags, &spec).unwrap();
        let geo = loose_geometry(&spec).unwrap();
        let cols: Vec<usize> = g.placed.iter().map(|p| geo.column_of(p.rect.x)).collect();
        assert_eq!(cols, vec![0, 1, 0, 1, 1, 1, 1]);
        assert_eq!(g.placed[3].rect.y, geo.big + 2.0);
        assert_eq!(
            g.placed.iter().map(|p| p.group).collect::<Vec<_>>(),
            vec![0, 1, 2, 3, 3, 3, 3]
        );
    }

    #[test]
    fn flag_length_mismatch() {
        assert!(layout_loose(&items(2), &[true], &LayoutSpec::new(400, 200, 2, 0)).is_err());
    }
}
