//! Unicode helpers shared by title normalization, phrase matching and slugs.

use unicode_normalization::UnicodeNormalization;

/// NFC-normalizes `s`.
pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// NFC, then full Unicode case folding, then NFC again (folding can
/// denormalize, e.g. for precomposed characters with iota subscripts).
pub fn fold(s: &str) -> String {
    let folded = caseless::default_case_fold_str(&nfc(s));
    nfc(&folded)
}

/// Replaces underscores by spaces and applies NFC.
pub fn normalize_title(title: &str) -> String {
    nfc(&title.replace('_', " "))
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// URL-path-safe slug: folded text with every maximal run of
/// non-alphanumeric characters collapsed to `-`, trimmed of leading and
/// trailing dashes and cut at `max_chars` characters.
pub fn slugify(s: &str, max_chars: usize) -> Option<String> {
    let mut out = String::new();
    let mut pending_dash = false;
    for c in fold(s).chars() {
        if is_word_char(c) {
            if pending_dash && !out.is_empty() {
                out.push('-');
            }
            pending_dash = false;
            out.push(c);
        } else {
            pending_dash = true;
        }
    }
    let truncated: String = out.chars().take(max_chars).collect();
    let trimmed = truncated.trim_matches('-');
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_owned())
    }
}
