//! Key-phrase filtering of synthesis paragraphs.
//!
//! Strategy 1 keeps a paragraph containing any of its phrases. Strategy 2
//! requires a gate term (`polycrystalline`) and one of its phrases. Matching
//! is case-insensitive substring containment over the lowercased text; a
//! paragraph is kept when either strategy fires.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Paragraph;
use crate::scalar::Scalar;
use crate::text::collapse_whitespace;
use crate::Fraction;

pub const RULES_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("unsupported rule file version {0} (expected {RULES_VERSION})")]
    Version(u32),
    #[error("{list} phrase {index} is empty or not whitespace-normalized: {phrase:?}")]
    BadPhrase {
        list: &'static str,
        index: usize,
        phrase: String,
    },
    #[error("invalid rule file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("gold set is empty; recall is undefined")]
    EmptyGold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRuleSet {
    pub version: u32,
    pub strategy1_phrases: Vec<String>,
    pub strategy2_gate_terms: Vec<String>,
    pub strategy2_phrases: Vec<String>,
}

/// Expands `a/b c/d` alternation notation into every combination.
/// Tokens wrapped in brackets (`[first]`) are optional.
pub fn expand_alternations(pattern: &str) -> Vec<String> {
    let mut acc: Vec<Vec<&str>> = vec![Vec::new()];
    for token in pattern.split_whitespace() {
        let (options, optional) = match token.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            Some(inner) => (inner.split('/').collect::<Vec<_>>(), true),
            None => (token.split('/').collect::<Vec<_>>(), false),
        };
        let mut next = Vec::with_capacity(acc.len() * (options.len() + optional as usize));
        for prefix in &acc {
            if optional {
                next.push(prefix.clone());
            }
            for opt in &options {
                let mut v = prefix.clone();
                v.push(opt);
                next.push(v);
            }
        }
        acc = next;
    }
    acc.into_iter().map(|words| words.join(" ")).collect()
}

const STRATEGY1_PATTERNS: &[&str] = &[
    "powder samples were prepared",
    "powders were obtained",
    "Polycrystalline ingots",
    "ground together and pressed into pellets",
    "starting materials were ground together",
    "were prepared using bulk solid state methods",
    "arc-melting stoichiometric quantities",
    "polycrystalline/Polycrystalline samples were",
    "polycrystalline/Polycrystalline sample was",
];

const STRATEGY2_PATTERNS: &[&str] = &[
    "were/was synthesized/prepared",
    "were/was first synthesized/prepared",
    "were/was used",
    "were/was first used",
    "were/was obtained",
    "were/was first obtained",
    "were/was achieved",
    "were/was first achieved",
];

fn dedup_preserving_order(items: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

impl Default for FilterRuleSet {
    fn default() -> Self {
        let s1 = STRATEGY1_PATTERNS.iter().flat_map(|p| expand_alternations(p)).collect();
        let s2 = STRATEGY2_PATTERNS.iter().flat_map(|p| expand_alternations(p)).collect();
        FilterRuleSet {
            version: RULES_VERSION,
            strategy1_phrases: dedup_preserving_order(s1),
            strategy2_gate_terms: vec!["polycrystalline".into(), "Polycrystalline".into()],
            strategy2_phrases: dedup_preserving_order(s2),
        }
    }
}

impl FilterRuleSet {
    pub fn from_json(s: &str) -> Result<Self, FilterError> {
        let rules: FilterRuleSet = serde_json::from_str(s)?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule set serializes") + "\n"
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if self.version != RULES_VERSION {
            return Err(FilterError::Version(self.version));
        }
        let lists = [
            ("strategy1_phrases", &self.strategy1_phrases),
            ("strategy2_gate_terms", &self.strategy2_gate_terms),
            ("strategy2_phrases", &self.strategy2_phrases),
        ];
        for (list, phrases) in lists {
            for (index, phrase) in phrases.iter().enumerate() {
                if phrase.is_empty() || collapse_whitespace(phrase) != *phrase {
                    return Err(FilterError::BadPhrase {
                        list,
                        index,
                        phrase: phrase.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchedStrategy {
    S1,
    S2,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub paragraph_id: String,
    pub kept: bool,
    pub matched_strategy: MatchedStrategy,
    pub matched_phrases: Vec<String>,
    /// Whether each strategy fired on its own, so other compositions can be recomputed.
    pub s1: bool,
    pub s2: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PhraseKind {
    S1,
    Gate,
    S2,
}

/// A rule set compiled into one automaton over lowercased text.
pub struct CompiledFilter {
    rules: FilterRuleSet,
    automaton: AhoCorasick,
    // pattern id -> (kind, index into the rule list)
    patterns: Vec<(PhraseKind, usize)>,
}

impl fmt::Debug for CompiledFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompiledFilter").field("rules", &self.rules).finish()
    }
}

impl CompiledFilter {
    pub fn new(rules: FilterRuleSet) -> Self {
        let mut needles = Vec::new();
        let mut patterns = Vec::new();
        let lists = [
            (PhraseKind::S1, &rules.strategy1_phrases),
            (PhraseKind::Gate, &rules.strategy2_gate_terms),
            (PhraseKind::S2, &rules.strategy2_phrases),
        ];
        for (kind, list) in lists {
            for (i, phrase) in list.iter().enumerate() {
                needles.push(phrase.to_lowercase());
                patterns.push((kind, i));
            }
        }
        let automaton = AhoCorasick::new(&needles).expect("phrase automaton builds");
        CompiledFilter {
            rules,
            automaton,
            patterns,
        }
    }

    pub fn rules(&self) -> &FilterRuleSet {
        &self.rules
    }

    pub fn apply(&self, p: &Paragraph) -> FilterDecision {
        self.apply_text(&p.paragraph_id, &p.text)
    }

    pub fn apply_text(&self, paragraph_id: &str, text: &str) -> FilterDecision {
        let lowered = text.to_lowercase();
        let mut s1_hits = vec![false; self.rules.strategy1_phrases.len()];
        let mut s2_hits = vec![false; self.rules.strategy2_phrases.len()];
        let mut gate = false;
        for m in self.automaton.find_overlapping_iter(&lowered) {
            let (kind, i) = self.patterns[m.pattern().as_usize()];
            match kind {
                PhraseKind::S1 => s1_hits[i] = true,
                PhraseKind::Gate => gate = true,
                PhraseKind::S2 => s2_hits[i] = true,
            }
        }
        let s1 = s1_hits.iter().any(|&h| h);
        let s2 = gate && s2_hits.iter().any(|&h| h);
        let mut matched_phrases = Vec::new();
        if s1 {
            matched_phrases.extend(pick(&self.rules.strategy1_phrases, &s1_hits));
        }
        if s2 {
            matched_phrases.extend(pick(&self.rules.strategy2_phrases, &s2_hits));
        }
        let matched_strategy = if s1 {
            MatchedStrategy::S1
        } else if s2 {
            MatchedStrategy::S2
        } else {
            MatchedStrategy::None
        };
        FilterDecision {
            paragraph_id: paragraph_id.to_string(),
            kept: s1 || s2,
            matched_strategy,
            matched_phrases,
            s1,
            s2,
        }
    }
}

fn pick<'a>(phrases: &'a [String], hits: &'a [bool]) -> impl Iterator<Item = String> + 'a {
    phrases.iter().zip(hits).filter(|(_, &h)| h).map(|(p, _)| p.clone())
}

pub fn apply_filter(p: &Paragraph, rules: &FilterRuleSet) -> FilterDecision {
    CompiledFilter::new(rules.clone()).apply(p)
}

pub fn filter_corpus(corpus: &[Paragraph], rules: &FilterRuleSet) -> Vec<FilterDecision> {
    let compiled = CompiledFilter::new(rules.clone());
    corpus.iter().map(|p| compiled.apply(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecallReport {
    pub retrieved_relevant: u64,
    pub gold_total: u64,
    #[serde(serialize_with = "serialize_fraction")]
    pub recall: Fraction,
}

fn serialize_fraction<S: serde::Serializer>(f: &Fraction, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", f.numer(), f.denom()))
}

impl RecallReport {
    pub fn value<S: Scalar>(&self) -> S {
        crate::scalar::ratio_or_zero(self.retrieved_relevant, self.gold_total)
    }

    pub fn decimal(&self) -> f64 {
        self.value()
    }
}

impl fmt::Display for RecallReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.decimal();
        write!(
            f,
            "recall {}/{} = {:.4} ({:.1}%)",
            self.retrieved_relevant,
            self.gold_total,
            d,
            d * 100.0
        )
    }
}

/// Fraction of gold paragraphs that were kept. Gold ids with no decision count as not kept.
pub fn eval_recall<'a, I>(decisions: &[FilterDecision], gold_relevant: I) -> Result<RecallReport, FilterError>
where
    I: IntoIterator<Item = &'a str>,
{
    let gold: BTreeSet<&str> = gold_relevant.into_iter().collect();
    if gold.is_empty() {
        return Err(FilterError::EmptyGold);
    }
    let kept: HashMap<&str, bool> = decisions.iter().map(|d| (d.paragraph_id.as_str(), d.kept)).collect();
    let retrieved = gold.iter().filter(|id| kept.get(*id).copied().unwrap_or(false)).count() as u64;
    let total = gold.len() as u64;
    Ok(RecallReport {
        retrieved_relevant: retrieved,
        gold_total: total,
        recall: Fraction::new(retrieved, total),
    })
}
