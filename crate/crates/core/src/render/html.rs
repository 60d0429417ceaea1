use std::fmt::Write;

use crate::layout::MediaGallery;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Shortest decimal form, rounded to thousandths of a pixel.
pub fn px(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

/// Gallery markup: one bordered, focusable wrapper per item linking to the
/// originating micropost, with the media sized to the whole-pixel interior.
pub fn emit_html(g: &MediaGallery) -> String {
    let width = g.spec.gallery_width_px;
    if g.placed.is_empty() {
        return format!("<div id=\"mediaGallery\" style=\"width: {width}px;\"></div>");
    }
    let mut out = format!("<div id=\"mediaGallery\" style=\"width: {width}px;\">\n");
    for (i, p) in g.placed.iter().enumerate() {
        let (w, h) = (p.rect.w, p.rect.h);
        let inner = format!("width: {}px; height: {}px;", w.floor(), h.floor());
        let item = &p.item;
        let _ = writeln!(
            out,
            "  <div class=\"mediaItem photoBorder\" tabindex=\"{}\" style=\"width: {}px; height: {}px;\">",
            i + 1,
            px(w),
            px(h)
        );
        let _ = writeln!(out, "    <a href=\"{}\">", escape(&item.micropost_url));
        if item.is_video() {
            let _ = writeln!(
                out,
                "      <video src=\"{}\" poster=\"{}\" class=\"gallery\" style=\"{inner}\"></video>",
                escape(&item.media_url),
                escape(item.poster_url.as_deref().unwrap_or_default())
            );
        } else {
            let _ = writeln!(
                out,
                "      <img src=\"{}\" class=\"gallery\" style=\"{inner}\">",
                escape(&item.media_url)
            );
        }
        out.push_str("    </a>\n  </div>\n");
    }
    out.push_str("</div>");
    out
}
