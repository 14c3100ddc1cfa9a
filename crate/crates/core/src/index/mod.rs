//! Slot-aware inverted index.
//!
//! Paragraphs get dense ordinals in paragraph-id order. Each mention adds
//! its paragraph to the posting list of its `(category, normalized value)`
//! key; paragraph text feeds a token index used for BM25 free-text
//! scoring. Slot constraints are intersected, and free text then filters
//! and ranks the survivors.

pub mod bm25;
pub mod persist;
pub mod postings;
pub mod query;
pub mod tokenize;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use persist::IndexError;
pub use query::{parse_query, QueryError, QueryParseError, ResolvedConstraint, SlotConstraint, SlotQuery};

use crate::kb::KnowledgeBase;
use crate::tagger::EntityCategory;
use crate::Bm25;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredMention {
    pub start: u32,
    pub end: u32,
    pub category: EntityCategory,
    pub normalized: String,
}

/// What the index keeps per paragraph to render results without the KB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredDoc {
    pub paragraph_id: String,
    pub article_id: String,
    pub text: String,
    pub mentions: Vec<StoredMention>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotIndex {
    pub(crate) docs: Vec<StoredDoc>,
    pub(crate) slot_postings: Vec<HashMap<String, Vec<u32>>>,
    pub(crate) token_postings: HashMap<String, Vec<(u32, u32)>>,
    pub(crate) doc_lengths: Vec<u32>,
    pub(crate) avg_doc_len: f64,
    pub(crate) ordinal_of: HashMap<String, u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    pub start: usize,
    pub end: usize,
    pub category: EntityCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub paragraph_id: String,
    pub article_id: String,
    pub score: f64,
    pub snippet: String,
    pub highlights: Vec<Highlight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPage {
    /// Matches before pagination.
    pub total: usize,
    pub results: Vec<SearchResult>,
}

impl SlotIndex {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn doc(&self, ordinal: u32) -> Option<&StoredDoc> {
        self.docs.get(ordinal as usize)
    }

    pub fn ordinal(&self, paragraph_id: &str) -> Option<u32> {
        self.ordinal_of.get(paragraph_id).copied()
    }

    pub fn postings(&self, category: EntityCategory, normalized: &str) -> &[u32] {
        self.slot_postings
            .get(category.index())
            .and_then(|m| m.get(normalized))
            .map_or(&[], Vec::as_slice)
    }

    pub fn token_postings(&self, term: &str) -> &[(u32, u32)] {
        self.token_postings.get(term).map_or(&[], Vec::as_slice)
    }

    /// Distinct values indexed under a slot.
    pub fn slot_keys(&self, category: EntityCategory) -> impl Iterator<Item = (&str, &[u32])> {
        self.slot_postings[category.index()]
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Rebuilds the derived lookup tables after the primary arrays change.
    pub(crate) fn finish(&mut self) {
        if self.slot_postings.len() != EntityCategory::COUNT {
            self.slot_postings.resize_with(EntityCategory::COUNT, HashMap::new);
        }
        self.ordinal_of = self
            .docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.paragraph_id.clone(), i as u32))
            .collect();
        let total: u64 = self.doc_lengths.iter().map(|&l| u64::from(l)).sum();
        self.avg_doc_len = if self.docs.is_empty() {
            0.0
        } else {
            total as f64 / self.docs.len() as f64
        };
    }
}

pub fn build_index(kb: &KnowledgeBase) -> SlotIndex {
    let mut idx = SlotIndex {
        slot_postings: vec![HashMap::new(); EntityCategory::COUNT],
        ..Default::default()
    };
    let ordinals: HashMap<&str, u32> = kb
        .paragraphs
        .keys()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u32))
        .collect();

    for (ordinal, p) in kb.paragraphs.values().enumerate() {
        let ordinal = ordinal as u32;
        let (folded, formulas) = tokenize::document_terms(&p.text);
        idx.doc_lengths.push(folded.len() as u32);
        let mut tf: HashMap<String, u32> = HashMap::new();
        for term in folded.into_iter().chain(formulas) {
            *tf.entry(term).or_default() += 1;
        }
        for (term, n) in tf {
            idx.token_postings.entry(term).or_default().push((ordinal, n));
        }
        idx.docs.push(StoredDoc {
            paragraph_id: p.paragraph_id.clone(),
            article_id: p.article_id.clone(),
            text: p.text.clone(),
            mentions: Vec::new(),
        });
    }

    // mentions are sorted by paragraph id, so ordinals arrive non-decreasing per key
    for m in &kb.mentions {
        let ordinal = ordinals[m.paragraph_id.as_str()];
        let list = idx.slot_postings[m.category.index()]
            .entry(m.normalized.clone())
            .or_default();
        if list.last() != Some(&ordinal) {
            debug_assert!(list.last().is_none_or(|&l| l < ordinal));
            list.push(ordinal);
        }
        idx.docs[ordinal as usize].mentions.push(StoredMention {
            start: m.start as u32,
            end: m.end as u32,
            category: m.category,
            normalized: m.normalized.clone(),
        });
    }
    idx.finish();
    idx
}

struct Hit {
    ordinal: u32,
    score: f64,
}

impl SlotIndex {
    /// Every match in result order, before pagination.
    fn evaluate(&self, q: &SlotQuery, constraints: &[ResolvedConstraint]) -> Vec<Hit> {
        let candidates: Option<Vec<u32>> = if constraints.is_empty() {
            None
        } else {
            let mut lists: Vec<&[u32]> = constraints.iter().map(|c| self.postings(c.category, &c.value)).collect();
            Some(postings::intersect_all(&mut lists))
        };
        let terms = q.free_text.as_deref().map(tokenize::query_terms).unwrap_or_default();
        if terms.is_empty() {
            // free text without any indexable token matches nothing on its own
            return candidates
                .unwrap_or_default()
                .into_iter()
                .map(|ordinal| Hit { ordinal, score: 1.0 })
                .collect();
        }

        let bm25 = Bm25::default();
        let n_docs = self.docs.len() as u64;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in &terms {
            let plist = self.token_postings(term);
            if plist.is_empty() {
                continue;
            }
            let idf = bm25.idf(n_docs, plist.len() as u64);
            let mut add = |ordinal: u32, tf: u32| {
                let s = bm25.term_score(idf, tf, self.doc_lengths[ordinal as usize], self.avg_doc_len);
                *scores.entry(ordinal).or_default() += s;
            };
            match &candidates {
                None => plist.iter().for_each(|&(o, tf)| add(o, tf)),
                Some(c) if c.len() < plist.len() => {
                    for &o in c {
                        if let Ok(i) = plist.binary_search_by_key(&o, |&(po, _)| po) {
                            add(o, plist[i].1);
                        }
                    }
                }
                Some(c) => {
                    for &(o, tf) in plist {
                        if c.binary_search(&o).is_ok() {
                            add(o, tf);
                        }
                    }
                }
            }
        }
        let mut hits: Vec<Hit> = scores.into_iter().map(|(ordinal, score)| Hit { ordinal, score }).collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.ordinal.cmp(&b.ordinal)));
        hits
    }

    fn render_hit(&self, hit: &Hit, constraints: &BTreeSet<(EntityCategory, &str)>) -> SearchResult {
        let doc = &self.docs[hit.ordinal as usize];
        SearchResult {
            paragraph_id: doc.paragraph_id.clone(),
            article_id: doc.article_id.clone(),
            score: hit.score,
            snippet: doc.text.clone(),
            highlights: doc
                .mentions
                .iter()
                .filter(|m| constraints.contains(&(m.category, m.normalized.as_str())))
                .map(|m| Highlight {
                    start: m.start as usize,
                    end: m.end as usize,
                    category: m.category,
                })
                .collect(),
        }
    }

    pub fn query(&self, q: &SlotQuery) -> Result<SearchPage, QueryError> {
        q.validate()?;
        let constraints = q.resolve()?;
        let hits = self.evaluate(q, &constraints);
        let keys: BTreeSet<(EntityCategory, &str)> =
            constraints.iter().map(|c| (c.category, c.value.as_str())).collect();
        let results = hits
            .iter()
            .skip(q.offset)
            .take(q.limit)
            .map(|h| self.render_hit(h, &keys))
            .collect();
        Ok(SearchPage {
            total: hits.len(),
            results,
        })
    }

    /// Paragraph ids of every match, in result order.
    pub fn matching_ids(&self, q: &SlotQuery) -> Result<Vec<&str>, QueryError> {
        q.validate()?;
        let constraints = q.resolve()?;
        Ok(self
            .evaluate(q, &constraints)
            .iter()
            .map(|h| self.docs[h.ordinal as usize].paragraph_id.as_str())
            .collect())
    }
}

pub fn query(idx: &SlotIndex, q: &SlotQuery) -> Result<SearchPage, QueryError> {
    idx.query(q)
}
