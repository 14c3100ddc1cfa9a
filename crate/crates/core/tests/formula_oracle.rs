//! Formula parser against an independent regex + element-table checker.

use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use matkb_core::tagger::{parse_chemical_formula, parse_formula};

const PERIODIC_TABLE: &str = "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn \
    Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho \
    Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf \
    Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og";

static WHOLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:[A-Z][a-z]?(?:[1-9][0-9]{0,5})?)+$").unwrap());
static GROUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([A-Z][a-z]?)([0-9]*)").unwrap());

/// `Some(true)` formula, `Some(false)` not a formula, `None` outside the
/// oracle's domain (zero-padded counts).
fn oracle(token: &str) -> Option<bool> {
    if token.is_empty() {
        return Some(false);
    }
    if !WHOLE.is_match(token) {
        // zero-padded counts like O04 are left to the unit tests
        let padded = Regex::new(r"^(?:[A-Z][a-z]?[0-9]*)+$").unwrap().is_match(token);
        return if padded { None } else { Some(false) };
    }
    let table: Vec<&str> = PERIODIC_TABLE.split_whitespace().collect();
    Some(GROUP.captures_iter(token).all(|c| table.contains(&&c[1])))
}

#[test]
fn independent_table_has_118_symbols() {
    assert_eq!(PERIODIC_TABLE.split_whitespace().count(), 118);
}

#[test]
fn accepts_table_examples() {
    for t in ["SiC", "FeSe", "ZnO", "LaFeAsO", "Co3O4", "Li2Co3", "Al", "Si", "Ga", "Zn"] {
        assert_eq!(oracle(t), Some(true), "{t}");
        assert!(parse_chemical_formula(t).is_ok(), "{t}");
    }
}

fn random_token(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-()";
    let len = rng.gen_range(1..8);
    (0..len)
        .map(|_| {
            // lean toward formula-shaped tokens so rejections are near misses
            if rng.gen_bool(0.4) {
                (b'A' + rng.gen_range(0..26)) as char
            } else {
                ALPHABET[rng.gen_range(0..ALPHABET.len())] as char
            }
        })
        .collect()
}

#[test]
fn rejects_random_non_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut rejected = 0;
    let mut accepted = 0;
    while rejected < 100 || accepted < 20 {
        let t = random_token(&mut rng);
        match oracle(&t) {
            Some(false) if rejected < 100 => {
                assert!(parse_formula(&t).is_err(), "grammar accepted {t:?}");
                assert!(parse_chemical_formula(&t).is_err(), "accepted {t:?}");
                rejected += 1;
            }
            Some(true) => {
                assert!(parse_formula(&t).is_ok(), "grammar rejected {t:?}");
                accepted += 1;
            }
            _ => {}
        }
    }
}

#[test]
fn english_lookalikes_are_stoplisted() {
    for t in ["In", "As", "At", "I", "No", "He", "Be"] {
        assert_eq!(oracle(t), Some(true), "{t} parses as elements");
        assert!(parse_formula(t).is_ok());
        assert!(parse_chemical_formula(t).is_err(), "{t}");
    }
    assert!(parse_chemical_formula("Xy3").is_err());
}
