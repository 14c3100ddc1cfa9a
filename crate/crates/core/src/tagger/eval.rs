//! Exact-match span evaluation.
//!
//! A predicted mention is correct iff its paragraph id, offsets and category
//! all equal some gold mention. Counts are micro-averaged.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::{EntityCategory, EntityMention};
use crate::scalar::{ratio_or_zero, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SpanCounts {
    pub true_positives: u64,
    pub predicted: u64,
    pub gold: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrfScores<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
}

impl SpanCounts {
    pub fn scores<S: Scalar>(&self) -> PrfScores<S> {
        // 2PR/(P+R) reduces to 2tp/(pred+gold), which stays exact for rationals
        PrfScores {
            precision: ratio_or_zero(self.true_positives, self.predicted),
            recall: ratio_or_zero(self.true_positives, self.gold),
            f1: ratio_or_zero(2 * self.true_positives, self.predicted + self.gold),
        }
    }

    fn swapped(self) -> Self {
        SpanCounts {
            predicted: self.gold,
            gold: self.predicted,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryScores<S> {
    pub category: EntityCategory,
    pub counts: SpanCounts,
    pub scores: PrfScores<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanF1Report<S> {
    pub counts: SpanCounts,
    pub overall: PrfScores<S>,
    pub per_category: Vec<CategoryScores<S>>,
}

type SpanKey<'a> = (&'a str, usize, usize, EntityCategory);

fn key(m: &EntityMention) -> SpanKey<'_> {
    (m.paragraph_id.as_str(), m.start, m.end, m.category)
}

/// Raw counts, overall and per category. Duplicate spans count once.
pub fn span_counts(pred: &[EntityMention], gold: &[EntityMention]) -> (SpanCounts, BTreeMap<EntityCategory, SpanCounts>) {
    let pred: HashSet<SpanKey<'_>> = pred.iter().map(key).collect();
    let gold: HashSet<SpanKey<'_>> = gold.iter().map(key).collect();
    let mut per: BTreeMap<EntityCategory, SpanCounts> =
        EntityCategory::ALL.into_iter().map(|c| (c, SpanCounts::default())).collect();
    let mut overall = SpanCounts::default();
    for k in &pred {
        let c = per.get_mut(&k.3).expect("every category present");
        c.predicted += 1;
        overall.predicted += 1;
        if gold.contains(k) {
            c.true_positives += 1;
            overall.true_positives += 1;
        }
    }
    for k in &gold {
        per.get_mut(&k.3).expect("every category present").gold += 1;
        overall.gold += 1;
    }
    (overall, per)
}

pub fn eval_span_f1<S: Scalar>(pred: &[EntityMention], gold: &[EntityMention]) -> SpanF1Report<S> {
    let (counts, per) = span_counts(pred, gold);
    SpanF1Report {
        counts,
        overall: counts.scores(),
        per_category: per
            .into_iter()
            .map(|(category, counts)| CategoryScores {
                category,
                counts,
                scores: counts.scores(),
            })
            .collect(),
    }
}

impl<S: Scalar> SpanF1Report<S> {
    /// The report with prediction and gold roles exchanged.
    pub fn swapped(&self) -> Self {
        let swap = |c: SpanCounts| c.swapped();
        SpanF1Report {
            counts: swap(self.counts),
            overall: swap(self.counts).scores(),
            per_category: self
                .per_category
                .iter()
                .map(|c| CategoryScores {
                    category: c.category,
                    counts: swap(c.counts),
                    scores: swap(c.counts).scores(),
                })
                .collect(),
        }
    }
}
