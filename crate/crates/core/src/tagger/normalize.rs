use std::sync::LazyLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use super::EntityCategory;
use crate::text::{canonical_degrees, collapse_whitespace};

static DEGREE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d)\s*°\s*([CcFf])").unwrap());

/// Canonical index key for a mention surface.
///
/// Trims and collapses whitespace, writes temperatures as `<number> °C`, and
/// case-folds everything except materials and brands.
pub fn normalize_value(surface: &str, category: EntityCategory) -> String {
    let nfc: String = surface.nfc().collect();
    let mut s = canonical_degrees(&nfc);
    if !category.preserves_case() {
        s = s.to_lowercase().nfc().collect();
    }
    let s = collapse_whitespace(&s);
    DEGREE
        .replace_all(&s, |caps: &regex::Captures<'_>| {
            format!("{} °{}", &caps[1], caps[2].to_uppercase())
        })
        .into_owned()
}
