//! Text normalization shared by ingest, tagging and indexing.
//!
//! All offsets handed out by this crate count Unicode scalar values (`char`s),
//! not bytes.

use unicode_normalization::UnicodeNormalization;

/// NFC, canonical `°C`, whitespace runs collapsed to one space, trimmed.
pub fn normalize_text(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    collapse_whitespace(&canonical_degrees(&nfc))
}

/// Maps `℃`/`℉` and degree signs separated from their scale by a
/// non-breaking or thin space onto `°C`/`°F`.
pub fn canonical_degrees(s: &str) -> String {
    if !s.contains(['\u{2103}', '\u{2109}', '°']) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\u{2103}' => out.push_str("°C"),
            '\u{2109}' => out.push_str("°F"),
            '°' => {
                out.push('°');
                while let Some(&next) = chars.peek() {
                    if is_nonbreaking_space(next) {
                        chars.next();
                    } else {
                        break;
                    }
                }
            }
            _ => out.push(c),
        }
    }
    out
}

fn is_nonbreaking_space(c: char) -> bool {
    matches!(c, '\u{00A0}' | '\u{202F}' | '\u{2007}' | '\u{2009}')
}

pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split(char::is_whitespace).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Byte offset of every char boundary, plus the total length as the final entry.
pub fn char_boundaries(s: &str) -> Vec<usize> {
    let mut v: Vec<usize> = s.char_indices().map(|(i, _)| i).collect();
    v.push(s.len());
    v
}

/// Slice `s` by char offsets; `None` when out of range.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut it = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let b_start = it.nth(start)?;
    let b_end = if end == start { b_start } else { it.nth(end - start - 1)? };
    Some(&s[b_start..b_end])
}
