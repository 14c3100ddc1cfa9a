//! Chemical formula recognition: `(ElementSymbol Digits?)+`.

use std::fmt;

pub const ELEMENTS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc",
    "Lv", "Ts", "Og",
];

/// Element-parseable tokens that are usually English words or unit letters.
/// They are only accepted next to another formula or a material context word.
pub const STOPLIST: &[&str] = &[
    "In", "As", "At", "I", "He", "No", "Be", "Am", "Es", "B", "C", "F", "H", "K", "N", "O", "P", "S", "U", "V", "W",
    "Y",
];

pub fn is_element(symbol: &str) -> bool {
    ELEMENTS.contains(&symbol)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub parts: Vec<(&'static str, u32)>,
}

impl Formula {
    pub fn element_count(&self) -> usize {
        let mut seen: Vec<&str> = self.parts.iter().map(|(e, _)| *e).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (el, n) in &self.parts {
            f.write_str(el)?;
            if *n != 1 {
                write!(f, "{n}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaReject {
    Empty,
    UnknownElement { at: usize },
    BadCount { at: usize },
    Stoplisted,
}

fn lookup(symbol: &str) -> Option<&'static str> {
    ELEMENTS.iter().copied().find(|e| *e == symbol)
}

/// Grammar-only parse: no stoplist.
pub fn parse_formula(token: &str) -> Result<Formula, FormulaReject> {
    let bytes = token.as_bytes();
    if bytes.is_empty() {
        return Err(FormulaReject::Empty);
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_uppercase() {
            return Err(FormulaReject::UnknownElement { at: i });
        }
        let two = (i + 1 < bytes.len() && bytes[i + 1].is_ascii_lowercase())
            .then(|| lookup(&token[i..i + 2]))
            .flatten();
        let symbol = match two {
            Some(s) => s,
            None => lookup(&token[i..i + 1]).ok_or(FormulaReject::UnknownElement { at: i })?,
        };
        i += symbol.len();
        let digits_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let count = if digits_start == i {
            1
        } else {
            let n: u32 = token[digits_start..i]
                .parse()
                .map_err(|_| FormulaReject::BadCount { at: digits_start })?;
            if n == 0 {
                return Err(FormulaReject::BadCount { at: digits_start });
            }
            n
        };
        parts.push((symbol, count));
    }
    Ok(Formula { parts })
}

/// Grammar parse plus stoplist rejection of word-like tokens.
pub fn parse_chemical_formula(token: &str) -> Result<Formula, FormulaReject> {
    if STOPLIST.contains(&token) {
        return Err(FormulaReject::Stoplisted);
    }
    parse_formula(token)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_table_is_complete_and_unique() {
        let mut v = ELEMENTS.to_vec();
        v.sort_unstable();
        v.dedup();
        assert_eq!(v.len(), 118);
    }

    #[test]
    fn parses_examples() {
        assert_eq!(parse_chemical_formula("Co3O4").unwrap().parts, [("Co", 3), ("O", 4)]);
        assert_eq!(
            parse_chemical_formula("LaFeAsO").unwrap().parts,
            [("La", 1), ("Fe", 1), ("As", 1), ("O", 1)]
        );
        assert_eq!(parse_chemical_formula("Li2Co3").unwrap().parts, [("Li", 2), ("Co", 3)]);
        assert_eq!(parse_chemical_formula("SiC").unwrap().parts, [("Si", 1), ("C", 1)]);
        assert_eq!(parse_chemical_formula("Co3O4").unwrap().to_string(), "Co3O4");
    }

    #[test]
    fn two_letter_symbols_first() {
        // "Co" is cobalt, "CO" is carbon + oxygen
        assert_eq!(parse_formula("Co").unwrap().parts, [("Co", 1)]);
        assert_eq!(parse_formula("CO").unwrap().parts, [("C", 1), ("O", 1)]);
        assert_eq!(parse_formula("Sc").unwrap().parts, [("Sc", 1)]);
    }

    #[test]
    fn rejections() {
        assert_eq!(parse_chemical_formula("In"), Err(FormulaReject::Stoplisted));
        assert!(parse_formula("In").is_ok());
        assert_eq!(parse_chemical_formula("Xy3"), Err(FormulaReject::UnknownElement { at: 0 }));
        assert_eq!(parse_chemical_formula(""), Err(FormulaReject::Empty));
        assert!(parse_chemical_formula("Sigma").is_err());
        assert!(parse_chemical_formula("3Fe").is_err());
        assert_eq!(parse_chemical_formula("Fe0"), Err(FormulaReject::BadCount { at: 2 }));
        assert!(parse_chemical_formula("Fe99999999999").is_err());
        assert!(parse_chemical_formula("fe").is_err());
        assert!(parse_chemical_formula("Fé").is_err());
    }

    #[test]
    fn element_count_dedups() {
        assert_eq!(parse_formula("CH3COOH").unwrap().element_count(), 3);
        assert_eq!(parse_formula("ZnO").unwrap().element_count(), 2);
    }
}
