//! Rule-based entity tagging over the 13-category schema.
//!
//! Three recognizer classes run over each paragraph, in priority order:
//! unit patterns, chemical formulas, then gazetteers. Overlaps are resolved
//! greedily: the longest candidate wins, and an earlier class wins a tie.

pub mod category;
pub mod eval;
pub mod formula;
pub mod import;
pub mod lexicon;
pub mod normalize;
mod units;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use category::{EntityCategory, UnknownCategory};
pub use formula::{parse_chemical_formula, parse_formula, Formula, FormulaReject};
pub use lexicon::{Lexicon, LexiconError, MatchMode};
pub use normalize::normalize_value;

use crate::ingest::Paragraph;
use crate::text::char_boundaries;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMention {
    pub paragraph_id: String,
    pub start: usize,
    pub end: usize,
    pub category: EntityCategory,
    pub surface: String,
    pub normalized: String,
}

impl EntityMention {
    /// Canonical ordering key: paragraph, then offsets, then category.
    pub fn sort_key(&self) -> (&str, usize, usize, EntityCategory) {
        (&self.paragraph_id, self.start, self.end, self.category)
    }
}

/// Words that license an otherwise stoplisted element symbol next to them.
const MATERIAL_CONTEXT: &[&str] = &[
    "powder", "powders", "metal", "metals", "shot", "shots", "foil", "foils", "wire", "wires", "pieces", "granules",
    "ingot", "ingots", "element", "elements", "chunks", "lumps", "flakes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum RecognizerClass {
    Unit = 0,
    Formula = 1,
    Gazetteer = 2,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    start: usize,
    end: usize,
    category: EntityCategory,
    class: RecognizerClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Token {
    start: usize,
    end: usize,
    word: bool,
}

/// Alphanumeric runs are word tokens; every other non-space char is its own token.
fn tokenize_chars(chars: &[char]) -> Vec<Token> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            out.push(Token { start, end: i, word: true });
        } else {
            out.push(Token {
                start: i,
                end: i + 1,
                word: false,
            });
            i += 1;
        }
    }
    out
}

fn token_strings(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    tokenize_chars(&chars)
        .iter()
        .map(|t| chars[t.start..t.end].iter().collect())
        .collect()
}

/// Gazetteer phrases keyed by token sequence.
#[derive(Debug, Clone, Default)]
struct PhraseTable {
    exact: HashMap<Vec<String>, EntityCategory>,
    folded: HashMap<Vec<String>, EntityCategory>,
    max_len: usize,
}

impl PhraseTable {
    fn build(lexicons: &[Lexicon]) -> Self {
        let mut table = PhraseTable::default();
        for lex in lexicons {
            for entry in &lex.entries {
                let toks = token_strings(entry);
                if toks.is_empty() {
                    continue;
                }
                table.max_len = table.max_len.max(toks.len());
                match lex.match_mode {
                    MatchMode::CaseSensitive => {
                        table.exact.entry(toks).or_insert(lex.category);
                    }
                    MatchMode::CaseInsensitive => {
                        let folded = toks.iter().map(|t| t.to_lowercase()).collect();
                        table.folded.entry(folded).or_insert(lex.category);
                    }
                }
            }
        }
        table
    }
}

/// Lexicons plus the lookup tables compiled from them. Immutable once built.
#[derive(Debug, Clone)]
pub struct TaggerConfig {
    lexicons: Vec<Lexicon>,
    phrases: PhraseTable,
}

impl TaggerConfig {
    pub fn new(lexicons: Vec<Lexicon>) -> Self {
        let phrases = PhraseTable::build(&lexicons);
        TaggerConfig { lexicons, phrases }
    }

    pub fn builtin() -> Self {
        Self::new(lexicon::builtin_lexicons())
    }

    pub fn from_dir(dir: &Path) -> Result<Self, LexiconError> {
        Ok(Self::new(lexicon::load_lexicons(dir)?))
    }

    pub fn lexicons(&self) -> &[Lexicon] {
        &self.lexicons
    }

    pub fn lexicon(&self, category: EntityCategory) -> Option<&Lexicon> {
        self.lexicons.iter().find(|l| l.category == category)
    }

    /// SHA-256 over the lexicon files in canonical form.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        for lex in &self.lexicons {
            h.update(lex.category.as_str().as_bytes());
            h.update([0]);
            h.update(lex.to_file_string().as_bytes());
        }
        hex::encode(h.finalize())
    }

    fn material_category(&self, token: &str, formula: &Formula) -> EntityCategory {
        let listed = |c| self.lexicon(c).is_some_and(|l| l.contains(token));
        if listed(EntityCategory::MaterialOthers) {
            EntityCategory::MaterialOthers
        } else if listed(EntityCategory::MaterialIntermedium) {
            EntityCategory::MaterialIntermedium
        } else if formula.element_count() == 1 || listed(EntityCategory::MaterialRecipe) {
            EntityCategory::MaterialRecipe
        } else {
            EntityCategory::MaterialTarget
        }
    }
}

impl Default for TaggerConfig {
    fn default() -> Self {
        Self::builtin()
    }
}

fn unit_candidates(text: &str, to_char: &HashMap<usize, usize>, out: &mut Vec<Candidate>) {
    for pattern in units::UNIT_PATTERNS.iter() {
        for (s, e) in units::bounded_matches(&pattern.regex, text) {
            out.push(Candidate {
                start: to_char[&s],
                end: to_char[&e],
                category: pattern.category,
                class: RecognizerClass::Unit,
            });
        }
    }
}

fn formula_candidates(chars: &[char], tokens: &[Token], config: &TaggerConfig, out: &mut Vec<Candidate>) {
    let words: Vec<(usize, String)> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.word)
        .map(|(i, t)| (i, chars[t.start..t.end].iter().collect()))
        .collect();
    for (w, (tok_idx, word)) in words.iter().enumerate() {
        let formula = match parse_chemical_formula(word) {
            Ok(f) => f,
            Err(FormulaReject::Stoplisted) => {
                let licensed = [w.checked_sub(1), Some(w + 1)]
                    .into_iter()
                    .flatten()
                    .filter_map(|n| words.get(n))
                    .any(|(_, neighbour)| {
                        parse_chemical_formula(neighbour).is_ok()
                            || MATERIAL_CONTEXT.contains(&neighbour.to_lowercase().as_str())
                    });
                match (licensed, parse_formula(word)) {
                    (true, Ok(f)) => f,
                    _ => continue,
                }
            }
            Err(_) => continue,
        };
        let t = tokens[*tok_idx];
        out.push(Candidate {
            start: t.start,
            end: t.end,
            category: config.material_category(word, &formula),
            class: RecognizerClass::Formula,
        });
    }
}

fn gazetteer_candidates(chars: &[char], tokens: &[Token], table: &PhraseTable, out: &mut Vec<Candidate>) {
    let strings: Vec<String> = tokens.iter().map(|t| chars[t.start..t.end].iter().collect()).collect();
    let folded: Vec<String> = strings.iter().map(|s| s.to_lowercase()).collect();
    for i in 0..tokens.len() {
        if !tokens[i].word {
            continue;
        }
        for len in 1..=table.max_len.min(tokens.len() - i) {
            let last = &tokens[i + len - 1];
            if !last.word {
                continue;
            }
            let hit = table
                .exact
                .get(&strings[i..i + len])
                .or_else(|| table.folded.get(&folded[i..i + len]));
            if let Some(&category) = hit {
                out.push(Candidate {
                    start: tokens[i].start,
                    end: last.end,
                    category,
                    class: RecognizerClass::Gazetteer,
                });
            }
        }
    }
}

/// Keeps the longest candidates first, then earlier recognizer classes,
/// dropping anything that overlaps an accepted span.
fn resolve(mut candidates: Vec<Candidate>, n_chars: usize) -> Vec<Candidate> {
    candidates.sort_by_key(|c| (std::cmp::Reverse(c.end - c.start), c.class, c.start, c.category));
    let mut taken = vec![false; n_chars];
    let mut accepted = Vec::new();
    for c in candidates {
        if taken[c.start..c.end].iter().any(|&t| t) {
            continue;
        }
        taken[c.start..c.end].iter_mut().for_each(|t| *t = true);
        accepted.push(c);
    }
    accepted.sort_by_key(|c| c.start);
    accepted
}

/// Tags one paragraph. Output is sorted by start offset and non-overlapping.
pub fn tag_paragraph(p: &Paragraph, config: &TaggerConfig) -> Vec<EntityMention> {
    tag_text(&p.paragraph_id, &p.text, config)
}

pub fn tag_text(paragraph_id: &str, text: &str, config: &TaggerConfig) -> Vec<EntityMention> {
    if text.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = text.chars().collect();
    let bounds = char_boundaries(text);
    let to_char: HashMap<usize, usize> = bounds.iter().enumerate().map(|(ci, &b)| (b, ci)).collect();
    let tokens = tokenize_chars(&chars);

    let mut candidates = Vec::new();
    unit_candidates(text, &to_char, &mut candidates);
    formula_candidates(&chars, &tokens, config, &mut candidates);
    gazetteer_candidates(&chars, &tokens, &config.phrases, &mut candidates);

    resolve(candidates, chars.len())
        .into_iter()
        .map(|c| {
            let surface = text[bounds[c.start]..bounds[c.end]].to_string();
            EntityMention {
                paragraph_id: paragraph_id.to_string(),
                start: c.start,
                end: c.end,
                category: c.category,
                normalized: normalize_value(&surface, c.category),
                surface,
            }
        })
        .collect()
}

pub fn tag_corpus(corpus: &[Paragraph], config: &TaggerConfig) -> Vec<EntityMention> {
    corpus.iter().flat_map(|p| tag_paragraph(p, config)).collect()
}
