//! Gazetteers: one phrase list per category.
//!
//! On disk a lexicon is a text file named after its category
//! (`Device.txt`), one phrase per line, `#` starting a comment. A line
//! `#! match: case_sensitive` (or `case_insensitive`) overrides the
//! category's default match mode.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EntityCategory;
use crate::text::collapse_whitespace;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon for {0} has no entries")]
    Empty(EntityCategory),
    #[error("{path}: unknown match mode {mode:?}")]
    BadDirective { path: String, mode: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    CaseSensitive,
    CaseInsensitive,
}

impl MatchMode {
    pub fn default_for(category: EntityCategory) -> Self {
        if category.preserves_case() {
            MatchMode::CaseSensitive
        } else {
            MatchMode::CaseInsensitive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub category: EntityCategory,
    pub entries: BTreeSet<String>,
    pub match_mode: MatchMode,
}

impl Lexicon {
    pub fn new<I, S>(category: EntityCategory, entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries: BTreeSet<String> = entries
            .into_iter()
            .map(|e| collapse_whitespace(e.as_ref()))
            .filter(|e| !e.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(LexiconError::Empty(category));
        }
        Ok(Lexicon {
            category,
            entries,
            match_mode: MatchMode::default_for(category),
        })
    }

    pub fn parse(category: EntityCategory, source: &str, path: &str) -> Result<Self, LexiconError> {
        let mut mode = None;
        let mut entries = Vec::new();
        for line in source.lines() {
            let line = line.trim();
            if let Some(directive) = line.strip_prefix("#!") {
                if let Some(value) = directive.trim().strip_prefix("match:") {
                    mode = Some(match value.trim() {
                        "case_sensitive" => MatchMode::CaseSensitive,
                        "case_insensitive" => MatchMode::CaseInsensitive,
                        other => {
                            return Err(LexiconError::BadDirective {
                                path: path.to_string(),
                                mode: other.to_string(),
                            })
                        }
                    });
                }
                continue;
            }
            let content = line.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                entries.push(content.to_string());
            }
        }
        let mut lex = Lexicon::new(category, entries)?;
        if let Some(m) = mode {
            lex.match_mode = m;
        }
        Ok(lex)
    }

    pub fn to_file_string(&self) -> String {
        let mode = match self.match_mode {
            MatchMode::CaseSensitive => "case_sensitive",
            MatchMode::CaseInsensitive => "case_insensitive",
        };
        let mut s = format!("# {} gazetteer\n#! match: {mode}\n", self.category);
        for e in &self.entries {
            s.push_str(e);
            s.push('\n');
        }
        s
    }

    pub fn file_name(category: EntityCategory) -> String {
        format!("{}.txt", category.as_str())
    }

    pub fn contains(&self, phrase: &str) -> bool {
        match self.match_mode {
            MatchMode::CaseSensitive => self.entries.contains(phrase),
            MatchMode::CaseInsensitive => {
                let lowered = phrase.to_lowercase();
                self.entries.iter().any(|e| e.to_lowercase() == lowered)
            }
        }
    }
}

macro_rules! builtin {
    ($($cat:ident => $file:literal),* $(,)?) => {
        &[$((EntityCategory::$cat, include_str!(concat!("../../data/lexicons/", $file)))),*]
    };
}

const BUILTIN: &[(EntityCategory, &str)] = builtin![
    Descriptor => "Descriptor.txt",
    MaterialIntermedium => "Material-intermedium.txt",
    Operation => "Operation.txt",
    Device => "Device.txt",
    Brand => "Brand.txt",
    PropertyPressure => "Property-pressure.txt",
    MaterialOthers => "Material-others.txt",
    MaterialRecipe => "Material-recipe.txt",
];

pub fn builtin_lexicons() -> Vec<Lexicon> {
    BUILTIN
        .iter()
        .map(|(c, src)| Lexicon::parse(*c, src, &Lexicon::file_name(*c)).expect("builtin lexicon parses"))
        .collect()
}

/// Loads `<Category>.txt` files from `dir`; categories with no file keep the builtin list.
pub fn load_lexicons(dir: &Path) -> Result<Vec<Lexicon>, LexiconError> {
    let mut out = Vec::new();
    let builtin = builtin_lexicons();
    for category in EntityCategory::ALL {
        let path = dir.join(Lexicon::file_name(category));
        if path.exists() {
            let display = path.display().to_string();
            let src = fs::read_to_string(&path).map_err(|source| LexiconError::Io {
                path: display.clone(),
                source,
            })?;
            out.push(Lexicon::parse(category, &src, &display)?);
        } else if let Some(lex) = builtin.iter().find(|l| l.category == category) {
            out.push(lex.clone());
        }
    }
    Ok(out)
}
