//! Free-text terms: alphanumeric runs, case-folded. Tokens that read as a
//! chemical formula are additionally kept in their original case, so
//! `Co` (cobalt) and `CO` stay distinguishable.

use crate::tagger::parse_chemical_formula;

fn raw_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

fn case_preserved_formula(token: &str) -> bool {
    token.chars().any(|c| c.is_uppercase()) && parse_chemical_formula(token).is_ok()
}

/// Folded terms (each counts toward document length) and the extra
/// case-preserved formula terms of a document.
pub fn document_terms(text: &str) -> (Vec<String>, Vec<String>) {
    let mut folded = Vec::new();
    let mut formulas = Vec::new();
    for tok in raw_tokens(text) {
        folded.push(tok.to_lowercase());
        if case_preserved_formula(tok) {
            formulas.push(tok.to_string());
        }
    }
    (folded, formulas)
}

/// Query terms, deduplicated in first-seen order. Formula-looking tokens
/// are looked up case-preserved.
pub fn query_terms(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tok in raw_tokens(text) {
        let term = if case_preserved_formula(tok) {
            tok.to_string()
        } else {
            tok.to_lowercase()
        };
        if !out.contains(&term) {
            out.push(term);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_fold_and_keep_formulas() {
        let (folded, formulas) = document_terms("Co3O4 was Heated; the CO-gas at 700 °C");
        assert_eq!(folded, ["co3o4", "was", "heated", "the", "co", "gas", "at", "700", "c"]);
        assert_eq!(formulas, ["Co3O4", "CO"]);
    }

    #[test]
    fn unicode_aware_split() {
        let (folded, _) = document_terms("Überprüfung—naïve café");
        assert_eq!(folded, ["überprüfung", "naïve", "café"]);
    }

    #[test]
    fn queries() {
        assert_eq!(query_terms("Arc melting arc"), ["arc", "melting"]);
        assert_eq!(query_terms("Co3O4 In"), ["Co3O4", "in"]);
        assert!(query_terms("!!").is_empty());
    }
}
