//! Numeric-unit and fixed-phrase recognizers for the property and value slots.

use std::sync::LazyLock;

use regex::Regex;

use super::EntityCategory;

const QUALIFIER: &str = r"(?:(?i:below|above|about|around|approximately|up to)\s+)?";
const NUMBER: &str = r"(?:\d{1,3}(?:,\d{3})+|\d+(?:\.\d+)?)(?:\s?[-–]\s?\d+(?:\.\d+)?)?";

pub(crate) struct UnitPattern {
    pub category: EntityCategory,
    pub regex: Regex,
}

fn numeric(category: EntityCategory, units: &str) -> UnitPattern {
    let src = format!(r"{QUALIFIER}{NUMBER}\s?(?:{units})");
    UnitPattern {
        category,
        regex: Regex::new(&src).expect("unit pattern compiles"),
    }
}

fn phrases(category: EntityCategory, words: &str) -> UnitPattern {
    UnitPattern {
        category,
        regex: Regex::new(&format!(r"(?i:{words})")).expect("phrase pattern compiles"),
    }
}

/// Order matters only for equal-length ties: earlier patterns win.
pub(crate) static UNIT_PATTERNS: LazyLock<Vec<UnitPattern>> = LazyLock::new(|| {
    use EntityCategory::*;
    vec![
        numeric(PropertyRate, r"(?:°C|°F|K)\s?/\s?(?:min|hour|hr|h|s)"),
        phrases(PropertyRate, r"cooling rate|heating rate"),
        numeric(PropertyTemperature, r"°C|°F|K"),
        phrases(PropertyTemperature, r"room temperature"),
        numeric(PropertyTime, r"hours|hour|hrs|hr|h|minutes|minute|mins|min|days|day|seconds|s"),
        numeric(PropertyPressure, r"kPa|KPa|MPa|GPa|Pa|Torr|torr|mbar|bar|atm"),
        phrases(PropertyPressure, r"ambient pressure|vacuum"),
        numeric(Value, r"mmol|mol|mg|kg|g|mL|ml|wt\.?\s?%|at\.?\s?%"),
        phrases(Value, r"stoichiometric amounts|stoichiometric amount|stoichiometric quantities"),
    ]
});

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte spans of every boundary-respecting match of `re` in `text`.
///
/// A match must not be glued to an alphanumeric character on either side.
/// When a match is rejected the search restarts one character later so a
/// shorter valid match inside it is still found.
pub(crate) fn bounded_matches(re: &Regex, text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos <= text.len() {
        let Some(m) = re.find_at(text, pos) else { break };
        let before_ok = text[..m.start()].chars().next_back().is_none_or(|c| !is_word_char(c));
        let after_ok = text[m.end()..].chars().next().is_none_or(|c| !is_word_char(c));
        if before_ok && after_ok && m.end() > m.start() {
            out.push((m.start(), m.end()));
            pos = m.end();
        } else {
            match text[m.start()..].chars().next() {
                Some(c) => pos = m.start() + c.len_utf8(),
                None => break,
            }
        }
    }
    out
}
