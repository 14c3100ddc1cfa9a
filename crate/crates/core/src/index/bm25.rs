use num_traits::Float;

/// Okapi BM25 term weighting.
///
/// Uses the non-negative idf variant `ln(1 + (N - n + 0.5) / (n + 0.5))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25<S> {
    pub k1: S,
    pub b: S,
}

impl<S: Float> Default for Bm25<S> {
    fn default() -> Self {
        Bm25 {
            k1: S::from(1.2).expect("k1 representable"),
            b: S::from(0.75).expect("b representable"),
        }
    }
}

impl<S: Float> Bm25<S> {
    pub fn idf(&self, n_docs: u64, doc_freq: u64) -> S {
        let half = S::from(0.5).unwrap();
        let n = S::from(n_docs).unwrap();
        let df = S::from(doc_freq).unwrap();
        (S::one() + (n - df + half) / (df + half)).ln()
    }

    pub fn term_score(&self, idf: S, tf: u32, doc_len: u32, avg_doc_len: S) -> S {
        let tf = S::from(tf).unwrap();
        let dl = S::from(doc_len).unwrap();
        let norm = if avg_doc_len > S::zero() { dl / avg_doc_len } else { S::one() };
        idf * tf * (self.k1 + S::one()) / (tf + self.k1 * (S::one() - self.b + self.b * norm))
    }
}
