use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{loose_geometry, GalleryKind, MediaGallery, Rect};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Aesthetics {
    pub balanced: bool,
    pub hole_free: bool,
    pub order_respecting: bool,
}

impl Aesthetics {
    pub fn all(&self) -> bool {
        self.balanced && self.hole_free && self.order_respecting
    }
}

pub fn check_aesthetics(g: &MediaGallery, epsilon_px: f64) -> Aesthetics {
    Aesthetics {
        balanced: balanced(g, epsilon_px),
        hole_free: hole_free(g),
        order_respecting: order_respecting(g, epsilon_px),
    }
}

fn rows(g: &MediaGallery) -> BTreeMap<usize, Vec<&Rect>> {
    let mut rows: BTreeMap<usize, Vec<&Rect>> = BTreeMap::new();
    for p in &g.placed {
        rows.entry(p.group).or_default().push(&p.rect);
    }
    rows
}

/// Bottom edge of every loose-kind column (0 for an empty column).
pub fn column_heights(g: &MediaGallery) -> Vec<f64> {
    let Ok(geo) = loose_geometry(&g.spec) else {
        return Vec::new();
    };
    let mut heights = vec![0.0f64; geo.columns as usize];
    for p in &g.placed {
        let col = geo.column_of(p.rect.x).min(heights.len() - 1);
        heights[col] = heights[col].max(p.rect.bottom());
    }
    heights
}

fn balanced(g: &MediaGallery, eps: f64) -> bool {
    match g.kind {
        GalleryKind::StrictOrderEqualSize => rows(g).values().all(|row| {
            let left = row.iter().map(|r| r.x).fold(f64::INFINITY, f64::min);
            let right = row
                .iter()
                .map(|r| r.right())
                .fold(f64::NEG_INFINITY, f64::max);
            left.abs() <= eps && (right - g.bounds_w).abs() <= eps
        }),
        GalleryKind::LooseOrderVaryingSize => {
            let heights = column_heights(g);
            if heights.is_empty() {
                return false;
            }
            let lo = heights.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo <= eps
        }
    }
}

fn sorted_edges(mut v: Vec<i64>) -> Vec<i64> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Nearest pixel edge; halves round up even when float noise lands just below them.
fn snap(v: f64) -> i64 {
    (v + 1e-6).round() as i64
}

/// No uncovered pixel is enclosed by media. Rectangles are grown by half a
/// gutter and snapped to the pixel grid; uncovered pixels that connect to the
/// open bottom edge of the bounding box (the ragged end of the gallery) are
/// not holes.
pub fn hole_free(g: &MediaGallery) -> bool {
    let half = g.spec.gutter() / 2.0;
    let (bw, bh) = (g.bounds_w.round() as i64, g.bounds_h.round() as i64);
    if bw <= 0 || bh <= 0 || g.placed.is_empty() {
        return true;
    }
    let boxes: Vec<[i64; 4]> = g
        .placed
        .iter()
        .map(|p| {
            let r = &p.rect;
            [
                snap(r.x - half).clamp(0, bw),
                snap(r.y - half).clamp(0, bh),
                snap(r.right() + half).clamp(0, bw),
                snap(r.bottom() + half).clamp(0, bh),
            ]
        })
        .collect();
    let xs = sorted_edges(
        boxes
            .iter()
            .flat_map(|b| [b[0], b[2]])
            .chain([0, bw])
            .collect(),
    );
    let ys = sorted_edges(
        boxes
            .iter()
            .flat_map(|b| [b[1], b[3]])
            .chain([0, bh])
            .collect(),
    );
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let mut covered = vec![false; nx * ny];
    for b in &boxes {
        let (x0, x1) = (
            xs.partition_point(|&v| v < b[0]),
            xs.partition_point(|&v| v < b[2]),
        );
        let (y0, y1) = (
            ys.partition_point(|&v| v < b[1]),
            ys.partition_point(|&v| v < b[3]),
        );
        for j in y0..y1 {
            covered[j * nx + x0..j * nx + x1].fill(true);
        }
    }

    let mut reached = covered.clone();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for i in 0..nx {
        let idx = (ny - 1) * nx + i;
        if !reached[idx] {
            reached[idx] = true;
            queue.push_back((i, ny - 1));
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        let mut visit = |i: usize, j: usize| {
            let idx = j * nx + i;
            if !reached[idx] {
                reached[idx] = true;
                queue.push_back((i, j));
            }
        };
        if i > 0 {
            visit(i - 1, j);
        }
        if i + 1 < nx {
            visit(i + 1, j);
        }
        if j > 0 {
            visit(i, j - 1);
        }
        if j + 1 < ny {
            visit(i, j + 1);
        }
    }
    reached.into_iter().all(|r| r)
}

/// Reading order: top to bottom, then left to right, tops within `eps`
/// counting as level.
fn reading_cmp(a: &Rect, b: &Rect, eps: f64) -> Ordering {
    if (a.y - b.y).abs() > eps {
        a.y.total_cmp(&b.y)
    } else {
        a.x.total_cmp(&b.x)
    }
}

fn in_reading_order<'a>(rects: impl Iterator<Item = &'a Rect>, eps: f64) -> bool {
    let rects: Vec<&Rect> = rects.collect();
    rects
        .windows(2)
        .all(|w| reading_cmp(w[0], w[1], eps) == Ordering::Less)
}

/// Strict kind: the placed list reads row by row, left to right. Loose kind:
/// units read in order of the input position that completed them (the end
/// of the input for a flushed partial block), and each small block reads
/// row-major.
fn order_respecting(g: &MediaGallery, eps: f64) -> bool {
    match g.kind {
        GalleryKind::StrictOrderEqualSize => {
            in_reading_order(g.placed.iter().map(|p| &p.rect), eps)
        }
        GalleryKind::LooseOrderVaryingSize => {
            let mut units: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, p) in g.placed.iter().enumerate() {
                units.entry(p.group).or_default().push(i);
            }
            let mut heads: Vec<(Rect, usize)> = Vec::with_capacity(units.len());
            for members in units.values() {
                if !in_reading_order(members.iter().map(|&i| &g.placed[i].rect), eps) {
                    return false;
                }
                let x = members
                    .iter()
                    .map(|&i| g.placed[i].rect.x)
                    .fold(f64::INFINITY, f64::min);
                let y = members
                    .iter()
                    .map(|&i| g.placed[i].rect.y)
                    .fold(f64::INFINITY, f64::min);
                let trigger = *members.iter().max().expect("unit has members");
                heads.push((
                    Rect {
                        x,
                        y,
                        w: 0.0,
                        h: 0.0,
                    },
                    trigger,
                ));
            }
            // a flushed partial block is completed by the end of the input
            let flushed = units.values().last().is_some_and(|m| m.len() == 1)
                && heads.len() > 1
                && heads[heads.len() - 1].1
                    < heads[..heads.len() - 1]
                        .iter()
                        .map(|h| h.1)
                        .max()
                        .unwrap_or(0);
            if flushed {
                heads.last_mut().expect("checked non-empty").1 = usize::MAX;
            }
            heads.sort_by(|a, b| reading_cmp(&a.0, &b.0, eps));
            heads.windows(2).all(|w| w[0].1 < w[1].1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{sized, with_aspects};
    use super::super::{layout_loose, layout_strict, LayoutSpec, PlacedItem};
    use super::*;

    fn triple(a: Aesthetics) -> (bool, bool, bool) {
        (a.balanced, a.hole_free, a.order_respecting)
    }

    #[test]
    fn strict_examples() {
        let spec = LayoutSpec::new(600, 200, 1, 0);
        let g = layout_strict(&with_aspects(&[1.0, 1.0, 1.0]), &spec).unwrap();
        assert_eq!(triple(check_aesthetics(&g, 1.0)), (true, true, true));
        let g = layout_strict(&with_aspects(&[2.0]), &spec).unwrap();
        assert_eq!(triple(check_aesthetics(&g, 1.0)), (false, true, true));
    }

    #[test]
    fn loose_example() {
        let items: Vec<_> = (0..5).map(|i| sized(i, 500, 500)).collect();
        let g = layout_loose(
            &items,
            &[true, false, false, false, false],
            &LayoutSpec::new(400, 200, 2, 0),
        )
        .unwrap();
        assert_eq!(column_heights(&g), vec![200.0, 200.0]);
        assert_eq!(triple(check_aesthetics(&g, 1.0)), (true, true, true));

        let g = layout_loose(&items[..3], &[false; 3], &LayoutSpec::new(400, 200, 2, 0)).unwrap();
        assert_eq!(triple(check_aesthetics(&g, 1.0)), (false, true, true));
    }

    #[test]
    fn big_before_pending_block_is_loosely_ordered() {
        let items: Vec<_> = (0..5).map(|i| sized(i, 500, 500)).collect();
        let g = layout_loose(
            &items,
            &[false, false, true, false, false],
            &LayoutSpec::new(400, 200, 2, 2),
        )
        .unwrap();
        assert!(check_aesthetics(&g, 1.0).order_respecting);
    }

    fn with_rect(g: &mut MediaGallery, i: usize, r: Rect) {
        g.placed[i] = PlacedItem {
            rect: r,
            ..g.placed[i].clone()
        };
    }

    #[test]
    fn detects_interior_gap() {
        let spec = LayoutSpec::new(600, 200, 1, 0);
        let mut g = layout_strict(&with_aspects(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]), &spec).unwrap();
        assert!(hole_free(&g));
        // shrink the middle item of the first row: a hole enclosed by row two
        with_rect(
            &mut g,
            1,
            Rect {
                x: 200.0,
                y: 0.0,
                w: 150.0,
                h: 200.0,
            },
        );
        assert!(!hole_free(&g));
    }

    #[test]
    fn gutters_are_not_holes() {
        let spec = LayoutSpec::new(604, 200, 3, 3);
        let items: Vec<_> = (0..9).map(|i| sized(i, 500, 300)).collect();
        let g = layout_loose(
            &items,
            &[true, true, true, false, false, false, false, true, true],
            &spec,
        )
        .unwrap();
        assert!(hole_free(&g));
        let g = layout_strict(&items, &spec).unwrap();
        assert!(hole_free(&g));
    }

    #[test]
    fn odd_gutter_edges_meet() {
        let mut g = layout_loose(
            &[sized(0, 9, 9), sized(1, 9, 9)],
            &[true, true],
            &LayoutSpec::new(405, 200, 2, 5),
        )
        .unwrap();
        assert!(hole_free(&g));
        // neighbours whose half-gutter edges straddle 173.5 by float noise
        with_rect(
            &mut g,
            0,
            Rect {
                x: 0.0,
                y: 0.0,
                w: 170.999_999_999_9,
                h: 200.0,
            },
        );
        with_rect(
            &mut g,
            1,
            Rect {
                x: 176.000_000_000_1,
                y: 0.0,
                w: 229.0,
                h: 200.0,
            },
        );
        assert!(hole_free(&g));
        with_rect(
            &mut g,
            1,
            Rect {
                x: 177.0,
                y: 0.0,
                w: 228.0,
                h: 200.0,
            },
        );
        g.placed.push(PlacedItem {
            rect: Rect {
                x: 0.0,
                y: 205.0,
                w: 405.0,
                h: 10.0,
            },
            ..g.placed[0].clone()
        });
        g.bounds_h = 215.0;
        assert!(!hole_free(&g));
    }

    #[test]
    fn detects_order_violation() {
        let spec = LayoutSpec::new(600, 200, 1, 0);
        let mut g = layout_strict(&with_aspects(&[1.0, 1.0, 1.0]), &spec).unwrap();
        g.placed.swap(0, 1);
        assert!(!check_aesthetics(&g, 1.0).order_respecting);
    }

    #[test]
    fn flushed_block_reads_last() {
        let items: Vec<_> = (0..3).map(|i| sized(i, 500, 500)).collect();
        let spec = LayoutSpec::new(400, 200, 2, 0);
        let g = layout_loose(&items, &[false, true, true], &spec).unwrap();
        assert_eq!(
            g.placed.iter().map(|p| p.group).collect::<Vec<_>>(),
            vec![2, 0, 1]
        );
        assert!(check_aesthetics(&g, 1.0).order_respecting);

        let mut swapped = layout_loose(&items, &[true, true, true], &spec).unwrap();
        let (a, b) = (swapped.placed[0].rect, swapped.placed[1].rect);
        with_rect(&mut swapped, 0, b);
        with_rect(&mut swapped, 1, a);
        assert!(!check_aesthetics(&swapped, 1.0).order_respecting);
    }

    #[test]
    fn empty_loose_gallery_is_balanced() {
        let g = layout_loose(&[], &[], &LayoutSpec::new(400, 200, 2, 0)).unwrap();
        assert_eq!(triple(check_aesthetics(&g, 1.0)), (true, true, true));
    }
}
