//! Slot query language.
//!
//! ```text
//! query  := clause (WS clause)*
//! clause := slot ':' value | bareword
//! value  := '"' chars '"' | run of non-space chars
//! ```
//!
//! Slots are matched case-insensitively with `_` and `-` interchangeable.
//! Barewords (quoted or not) are joined into the free-text part. Quoted
//! strings accept `\"` and `\\` escapes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tagger::{normalize_value, EntityCategory, UnknownCategory};
use crate::text::collapse_whitespace;

pub const DEFAULT_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct QueryParseError {
    /// 1-based, counted in chars.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] QueryParseError),
    #[error("query has no slot constraints and no free text")]
    Empty,
    #[error(transparent)]
    UnknownSlot(#[from] UnknownCategory),
    #[error("limit must be at least 1")]
    InvalidLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotConstraint {
    pub slot: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotQuery {
    pub slot_constraints: Vec<SlotConstraint>,
    pub free_text: Option<String>,
    pub limit: usize,
    pub offset: usize,
}

impl Default for SlotQuery {
    fn default() -> Self {
        SlotQuery {
            slot_constraints: Vec::new(),
            free_text: None,
            limit: DEFAULT_LIMIT,
            offset: 0,
        }
    }
}

/// A constraint after alias resolution and value normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResolvedConstraint {
    pub category: EntityCategory,
    pub value: String,
}

impl SlotQuery {
    pub fn slot(mut self, slot: &str, value: &str) -> Self {
        self.slot_constraints.push(SlotConstraint {
            slot: slot.to_string(),
            value: value.to_string(),
        });
        self
    }

    pub fn text(mut self, free_text: &str) -> Self {
        let t = collapse_whitespace(free_text);
        self.free_text = (!t.is_empty()).then_some(t);
        self
    }

    pub fn page(mut self, limit: usize, offset: usize) -> Self {
        self.limit = limit;
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        let has_text = self.free_text.as_deref().is_some_and(|t| !t.trim().is_empty());
        if self.slot_constraints.is_empty() && !has_text {
            return Err(QueryError::Empty);
        }
        if self.limit == 0 {
            return Err(QueryError::InvalidLimit);
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Vec<ResolvedConstraint>, QueryError> {
        self.slot_constraints
            .iter()
            .map(|c| {
                let category = EntityCategory::resolve(&c.slot)?;
                Ok(ResolvedConstraint {
                    category,
                    value: normalize_value(&c.value, category),
                })
            })
            .collect()
    }

    /// Canonical query string; `parse_query` reads it back to an equal query
    /// (up to `limit`/`offset`, which are not part of the string).
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = self
            .slot_constraints
            .iter()
            .map(|c| format!("{}:{}", c.slot, render_value(&c.value)))
            .collect();
        if let Some(t) = &self.free_text {
            parts.extend(t.split_whitespace().map(render_bareword));
        }
        parts.join(" ")
    }
}

impl fmt::Display for SlotQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn render_value(v: &str) -> String {
    if v.is_empty() || v.starts_with('"') || v.chars().any(char::is_whitespace) {
        quote(v)
    } else {
        v.to_string()
    }
}

fn render_bareword(w: &str) -> String {
    if w.starts_with('"') || slot_prefix_len(&w.chars().collect::<Vec<_>>()).is_some() {
        quote(w)
    } else {
        w.to_string()
    }
}

fn is_slot_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_slot_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Length of an `identifier` followed by `:` at the start of `chars`.
fn slot_prefix_len(chars: &[char]) -> Option<usize> {
    if !chars.first().copied().is_some_and(is_slot_start) {
        return None;
    }
    let n = chars.iter().take_while(|c| is_slot_char(**c)).count();
    (chars.get(n) == Some(&':')).then_some(n)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn err(&self, at: usize, message: impl Into<String>) -> QueryParseError {
        QueryParseError {
            column: at + 1,
            message: message.into(),
        }
    }

    fn at_space_or_end(&self) -> bool {
        self.chars.get(self.pos).is_none_or(|c| c.is_whitespace())
    }

    fn quoted(&mut self) -> Result<String, QueryParseError> {
        let open = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.chars.get(self.pos) {
                None => return Err(self.err(open, "unterminated quote")),
                Some('"') => {
                    self.pos += 1;
                    break;
                }
                Some('\\') => match self.chars.get(self.pos + 1) {
                    Some(&c @ ('"' | '\\')) => {
                        out.push(c);
                        self.pos += 2;
                    }
                    _ => {
                        out.push('\\');
                        self.pos += 1;
                    }
                },
                Some(&c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        if !self.at_space_or_end() {
            return Err(self.err(self.pos, "expected whitespace after closing quote"));
        }
        Ok(out)
    }

    fn run(&mut self) -> String {
        let start = self.pos;
        while !self.at_space_or_end() {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }
}

pub fn parse_query(text: &str) -> Result<SlotQuery, QueryParseError> {
    let mut cur = Cursor {
        chars: text.chars().collect(),
        pos: 0,
    };
    let mut query = SlotQuery::default();
    let mut words: Vec<String> = Vec::new();
    loop {
        while cur.chars.get(cur.pos).is_some_and(|c| c.is_whitespace()) {
            cur.pos += 1;
        }
        if cur.pos >= cur.chars.len() {
            break;
        }
        if let Some(n) = slot_prefix_len(&cur.chars[cur.pos..]) {
            let slot: String = cur.chars[cur.pos..cur.pos + n].iter().collect();
            cur.pos += n + 1;
            let value_at = cur.pos;
            let value = if cur.chars.get(cur.pos) == Some(&'"') {
                cur.quoted()?
            } else {
                cur.run()
            };
            if value.is_empty() {
                return Err(cur.err(value_at, format!("empty value for slot {slot:?}")));
            }
            query.slot_constraints.push(SlotConstraint { slot, value });
        } else if cur.chars[cur.pos] == '"' {
            words.push(cur.quoted()?);
        } else {
            words.push(cur.run());
        }
    }
    let free = collapse_whitespace(&words.join(" "));
    query.free_text = (!free.is_empty()).then_some(free);
    if query.slot_constraints.is_empty() && query.free_text.is_none() {
        return Err(QueryParseError {
            column: 1,
            message: "empty query".into(),
        });
    }
    Ok(query)
}
