use std::collections::HashMap;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{imageops, ExtendedColorType, ImageEncoder, Rgb, RgbImage};

use super::font::{glyph, GLYPH_H, GLYPH_W};
use super::RenderConfig;
use crate::dedup_rank::resample_bilinear;
use crate::error::{Error, Result};
use crate::layout::{Crop, MediaGallery};

/// Left margin of attribution text.
const TEXT_INSET_PX: u32 = 2;

/// Canvas size for a gallery dump: the gallery bounds plus one attribution
/// line per placed item.
pub fn dump_dimensions(g: &MediaGallery, cfg: &RenderConfig) -> (u32, u32) {
    let lines = g.placed.len() as u32 * cfg.attribution_line_height_px;
    (g.bounds_w.ceil() as u32, g.bounds_h.ceil() as u32 + lines)
}

fn fill(canvas: &mut RgbImage, x0: u32, y0: u32, x1: u32, y1: u32, color: Rgb<u8>) {
    let (w, h) = canvas.dimensions();
    for y in y0.min(h)..y1.min(h) {
        for x in x0.min(w)..x1.min(w) {
            canvas.put_pixel(x, y, color);
        }
    }
}

fn draw_text(canvas: &mut RgbImage, text: &str, x0: u32, y0: u32, max_w: u32, color: Rgb<u8>) {
    let (w, h) = canvas.dimensions();
    let fit = (max_w / GLYPH_W) as usize;
    for (i, c) in text.chars().take(fit).enumerate() {
        let gx = x0 + i as u32 * GLYPH_W;
        for (dy, bits) in glyph(c).iter().enumerate() {
            let y = y0 + dy as u32;
            for dx in 0..GLYPH_W {
                let x = gx + dx;
                if bits >> (GLYPH_W - 1 - dx) & 1 == 1 && x < w && y < h {
                    canvas.put_pixel(x, y, color);
                }
            }
        }
    }
}

/// Rasterizes `g` with one attribution line (the micropost URL) per item.
/// `rasters` maps item ids to decoded images; loose-kind items are cropped to
/// a centered square of the decoded raster.
pub fn compose(
    g: &MediaGallery,
    rasters: &HashMap<String, RgbImage>,
    cfg: &RenderConfig,
) -> Result<RgbImage> {
    cfg.validate()?;
    if g.placed.is_empty() {
        return Err(Error::Render("nothing to dump: gallery is empty".into()));
    }
    let (cw, ch) = dump_dimensions(g, cfg);
    let mut canvas = RgbImage::from_pixel(cw, ch, Rgb(cfg.background_color));
    let border = Rgb(cfg.border_color);

    for p in &g.placed {
        let src = rasters
            .get(&p.item.item_id)
            .ok_or_else(|| Error::Render(format!("no raster for {}", p.item.item_id)))?;
        let x0 = p.rect.x.round().max(0.0) as u32;
        let y0 = p.rect.y.round().max(0.0) as u32;
        let x1 = (p.rect.right().round() as u32).min(cw).max(x0 + 1);
        let y1 = (p.rect.bottom().round() as u32).min(ch).max(y0 + 1);
        let cropped;
        let src = match p.crop {
            Some(_) => {
                let c = Crop::centered(src.width(), src.height());
                cropped = imageops::crop_imm(src, c.x, c.y, c.side, c.side).to_image();
                &cropped
            }
            None => src,
        };
        let tile = resample_bilinear(src, x1 - x0, y1 - y0);
        imageops::replace(&mut canvas, &tile, i64::from(x0), i64::from(y0));
        let b = cfg.border_px;
        fill(&mut canvas, x0, y0, x1, y0 + b, border);
        fill(&mut canvas, x0, y1.saturating_sub(b), x1, y1, border);
        fill(&mut canvas, x0, y0, x0 + b, y1, border);
        fill(&mut canvas, x1.saturating_sub(b), y0, x1, y1, border);
    }

    let line_h = cfg.attribution_line_height_px;
    let top = g.bounds_h.ceil() as u32;
    let pad = line_h.saturating_sub(GLYPH_H) / 2;
    for (i, p) in g.placed.iter().enumerate() {
        let y = top + i as u32 * line_h + pad;
        draw_text(
            &mut canvas,
            &p.item.micropost_url,
            TEXT_INSET_PX,
            y,
            cw.saturating_sub(2 * TEXT_INSET_PX),
            Rgb(cfg.text_color),
        );
    }
    Ok(canvas)
}

/// PNG bytes with pinned compression and filter settings.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    PngEncoder::new_with_quality(&mut buf, CompressionType::Default, FilterType::Sub).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        ExtendedColorType::Rgb8,
    )?;
    Ok(buf)
}

/// [`compose`] followed by [`encode_png`].
pub fn compose_png(
    g: &MediaGallery,
    rasters: &HashMap<String, RgbImage>,
    cfg: &RenderConfig,
) -> Result<(RgbImage, Vec<u8>)> {
    let img = compose(g, rasters, cfg)?;
    let bytes = encode_png(&img)?;
    Ok((img, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::tests::sized;
    use crate::layout::{layout_loose, layout_strict, LayoutSpec};

    fn rasters(g: &MediaGallery) -> HashMap<String, RgbImage> {
        g.placed
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let img = RgbImage::from_fn(40, 30, |x, y| {
                    Rgb([(x * 6) as u8, (y * 8) as u8, (i * 40) as u8])
                });
                (p.item.item_id.clone(), img)
            })
            .collect()
    }

    #[test]
    fn loose_dump_dimensions() {
        let items: Vec<_> = (0..5).map(|i| sized(i, 40, 30)).collect();
        let g = layout_loose(
            &items,
            &[true, false, false, false, false],
            &LayoutSpec::new(400, 200, 2, 0),
        )
        .unwrap();
        let (img, bytes) = compose_png(&g, &rasters(&g), &RenderConfig::default()).unwrap();
        assert_eq!(img.dimensions(), (400, 270));
        let decoded = image::load_from_memory(&bytes).unwrap().to_rgb8();
        assert_eq!(decoded, img);
    }

    #[test]
    fn spec_sized_loose_dump() {
        let items: Vec<_> = (0..5).map(|i| sized(i, 40, 30)).collect();
        let g = layout_loose(
            &items,
            &[true, false, false, false, false],
            &LayoutSpec::new(400, 200, 2, 0),
        )
        .unwrap();
        let mut tall = g.clone();
        tall.bounds_h = 400.0;
        assert_eq!(dump_dimensions(&tall, &RenderConfig::default()), (400, 470));
    }

    #[test]
    fn empty_gallery_is_an_error() {
        let g = MediaGallery::empty(
            crate::layout::GalleryKind::StrictOrderEqualSize,
            LayoutSpec::default(),
        );
        assert!(matches!(
            compose_png(&g, &HashMap::new(), &RenderConfig::default()),
            Err(Error::Render(_))
        ));
    }

    #[test]
    fn missing_raster_names_the_item() {
        let g = layout_strict(&[sized(3, 40, 30)], &LayoutSpec::new(300, 100, 1, 0)).unwrap();
        let err = compose_png(&g, &HashMap::new(), &RenderConfig::default()).unwrap_err();
        assert!(err.to_string().contains("n:003"));
    }

    #[test]
    fn byte_identical_reruns() {
        let items: Vec<_> = (0..4).map(|i| sized(i, 40, 30)).collect();
        let g = layout_strict(&items, &LayoutSpec::new(300, 100, 1, 2)).unwrap();
        let r = rasters(&g);
        let a = compose_png(&g, &r, &RenderConfig::default()).unwrap().1;
        let b = compose_png(&g, &r, &RenderConfig::default()).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn attribution_text_is_drawn() {
        let g = layout_strict(&[sized(1, 40, 30)], &LayoutSpec::new(300, 100, 1, 0)).unwrap();
        let img = compose(&g, &rasters(&g), &RenderConfig::default()).unwrap();
        let strip_dark = (0..300)
            .flat_map(|x| (100..114).map(move |y| (x, y)))
            .filter(|&(x, y)| img.get_pixel(x, y).0 == [0, 0, 0])
            .count();
        assert!(strip_dark > 20);
        assert_eq!(*img.get_pixel(0, 0), Rgb([204, 204, 204]));
    }
}
