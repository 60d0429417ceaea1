use crate::error::Result;

use super::{check_aesthetics, layout, GalleryKind, LayoutItem, LayoutSpec, MediaGallery};

pub const DEFAULT_MAX_STEPS: usize = 5;

const EPSILON_PX: f64 = 1.0;

/// Count offsets in trial order: 0, +1, −1, +2, −2, …
fn offsets(max_steps: usize) -> impl Iterator<Item = isize> {
    std::iter::once(0).chain((1..=max_steps as isize).flat_map(|k| [k, -k]))
}

/// Members of the unit that a loose layout would emit last, including the
/// items a final flush would omit.
fn final_unit(flags: &[bool]) -> Vec<usize> {
    let mut last = Vec::new();
    let mut pending = Vec::new();
    for (i, &big) in flags.iter().enumerate() {
        if big {
            last = vec![i];
        } else {
            pending.push(i);
            if pending.len() == 4 {
                last = std::mem::take(&mut pending);
            }
        }
    }
    if pending.is_empty() {
        last
    } else {
        pending
    }
}

/// Prominence variants tried for one candidate count: the flags as given,
/// the whole final unit toggled, then each final-unit member toggled alone.
fn flag_variants(flags: &[bool]) -> Vec<Vec<bool>> {
    let mut out = vec![flags.to_vec()];
    let unit = final_unit(flags);
    let mut whole = flags.to_vec();
    for &i in &unit {
        whole[i] = !whole[i];
    }
    out.push(whole);
    if unit.len() > 1 {
        for &i in &unit {
            let mut one = flags.to_vec();
            one[i] = !one[i];
            out.push(one);
        }
    }
    let mut seen = Vec::new();
    out.retain(|v| {
        if seen.contains(v) {
            false
        } else {
            seen.push(v.clone());
            true
        }
    });
    out
}

/// Searches item counts around `items.len()` (additions taken in order from
/// `reserve`, removals from the end) and, for the loose kind, prominence
/// toggles of the final unit. Returns the first candidate satisfying all
/// three principles; otherwise the most balanced candidate closest to the
/// original count, flagged `best_effort`.
pub fn balance_gallery(
    items: &[LayoutItem],
    reserve: &[LayoutItem],
    spec: &LayoutSpec,
    kind: GalleryKind,
    max_steps: usize,
) -> Result<MediaGallery> {
    let n = items.len();
    let mut best: Option<((bool, bool, usize), MediaGallery)> = None;
    let mut first_err = None;

    for k in offsets(max_steps) {
        let count = n as isize + k;
        if count < 1 || (k > 0 && k as usize > reserve.len()) {
            continue;
        }
        let count = count as usize;
        let mut candidate: Vec<LayoutItem> = items.iter().take(count).cloned().collect();
        candidate.extend(reserve.iter().take(count.saturating_sub(n)).cloned());
        let dropped = &items[count.min(n)..];

        let variants = match kind {
            GalleryKind::StrictOrderEqualSize => {
                vec![candidate.iter().map(|l| l.prominent).collect()]
            }
            GalleryKind::LooseOrderVaryingSize => {
                flag_variants(&candidate.iter().map(|l| l.prominent).collect::<Vec<_>>())
            }
        };
        for flags in variants {
            let trial: Vec<LayoutItem> = candidate
                .iter()
                .zip(&flags)
                .map(|(l, &p)| LayoutItem::new(l.item.clone(), p))
                .collect();
            let mut g = match layout(kind, &trial, spec) {
                Ok(g) => g,
                Err(e) => {
                    first_err.get_or_insert(e);
                    continue;
                }
            };
            g.omitted.extend(dropped.iter().map(|l| l.item.clone()));
            let a = check_aesthetics(&g, EPSILON_PX);
            if a.all() {
                return Ok(g);
            }
            let rank = (
                a.balanced,
                a.hole_free && a.order_respecting,
                usize::MAX - k.unsigned_abs(),
            );
            if best.as_ref().is_none_or(|(r, _)| rank > *r) {
                best = Some((rank, g));
            }
        }
    }

    match (best, first_err) {
        (Some((_, mut g)), _) => {
            g.best_effort = true;
            Ok(g)
        }
        (None, Some(e)) => Err(e),
        (None, None) => Ok(MediaGallery::empty(kind, *spec)),
    }
}
