//! Deterministic synthetic knowledge bases and the brute-force scans used to
//! check index results.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use matkb_core::ingest::ArticleMeta;
use matkb_core::kb::Provenance;
use matkb_core::tagger::normalize_value;
use matkb_core::{EntityCategory, EntityMention, KnowledgeBase, Paragraph, SlotQuery};

const FILLER: &[&str] = &[
    "the", "mixture", "was", "then", "and", "after", "with", "under", "using", "were", "carefully", "slowly",
    "obtained", "sample", "reaction", "final", "product", "washed", "dried", "again",
];

/// Surface vocabulary per category. Temperatures come in two spellings so
/// that normalization is exercised.
pub fn vocabulary(category: EntityCategory) -> Vec<String> {
    use EntityCategory::*;
    let list: &[&str] = match category {
        Descriptor => &["polycrystalline", "single-phase", "powder", "high-purity", "dense", "fine"],
        MaterialTarget => &["SiC", "FeSe", "ZnO", "LaFeAsO", "BaTiO3", "LiCoO2", "SrTiO3", "MgB2", "CoSb3"],
        MaterialIntermedium => &["pellets", "precursor", "mixture", "ingot", "slurry", "gel"],
        Operation => &["sintered", "annealed", "ground", "calcined", "pressed", "quenched", "heated", "milled"],
        Device => &["tube furnace", "Tube Furnace", "alumina crucible", "quartz tube", "agate mortar", "ball mill"],
        Brand => &["Sigma-Aldrich", "Alfa Aesar", "Rigaku", "Bruker", "Merck"],
        PropertyTime => &["24 h", "12 h", "30 min", "2 days", "10 min", "48 h"],
        Value => &["10 mg", "2 ml", "5 g", "0.5 mol", "stoichiometric amounts"],
        PropertyPressure => &["vacuum", "ambient pressure", "10 MPa", "1 atm", "air"],
        MaterialOthers => &["ethanol", "water", "acetone", "argon"],
        MaterialRecipe => &[
            "Co3O4", "Li2CO3", "Li2Co3", "Fe2O3", "TiO2", "NiO", "CuO", "MgO", "Al2O3", "La2O3", "SrCO3", "Al", "Si",
            "Ga", "Zn",
        ],
        PropertyTemperature => {
            return (2..=30)
                .flat_map(|h| {
                    let t = h * 50;
                    [format!("{t} °C"), format!("{t}°C")]
                })
                .chain(["room temperature".to_string(), "Room Temperature".into(), "below 600 °C".into()])
                .collect()
        }
        PropertyRate => &["2 K/min", "5 °C/min", "10 °C/min", "cooling rate", "heating rate"],
    };
    list.iter().map(|s| s.to_string()).collect()
}

/// Skewed pick: low indices are much more frequent, giving long and short
/// posting lists side by side.
fn skewed<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    let u: f64 = rng.gen();
    let i = ((u * u) * items.len() as f64) as usize;
    &items[i.min(items.len() - 1)]
}

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub paragraphs: usize,
    pub mentions_per_paragraph: usize,
    pub seed: u64,
}

/// Planted in every `PLANT_EVERY`-th paragraph so that the named example
/// queries (recipe; temperature; temperature and recipe) always have hits.
const PLANTED_MENTIONS: [[(EntityCategory, &str); 2]; 4] = [
    [(EntityCategory::MaterialRecipe, "Co3O4"), (EntityCategory::PropertyTemperature, "700 °C")],
    [(EntityCategory::MaterialRecipe, "Li2Co3"), (EntityCategory::PropertyTemperature, "1000°C")],
    [(EntityCategory::MaterialRecipe, "Co3O4"), (EntityCategory::PropertyTemperature, "700°C")],
    [(EntityCategory::MaterialRecipe, "Li2Co3"), (EntityCategory::PropertyTemperature, "1000 °C")],
];
pub const PLANT_EVERY: usize = 25;

/// Builds a KB whose paragraph texts are assembled around the mention
/// surfaces, so every span is valid by construction.
pub fn synth_kb(spec: SynthSpec) -> KnowledgeBase {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab: Vec<Vec<String>> = EntityCategory::ALL.iter().map(|c| vocabulary(*c)).collect();
    let n_articles = spec.paragraphs.div_ceil(8).max(1);
    let mut paragraphs = Vec::with_capacity(spec.paragraphs);
    let mut mentions = Vec::with_capacity(spec.paragraphs * spec.mentions_per_paragraph);
    for i in 0..spec.paragraphs {
        let article = format!("SYN-{:06}", i % n_articles);
        let pid = format!("{article}#{}", i / n_articles);
        let mut text = String::new();
        let mut pos = 0usize;
        let push = |text: &mut String, pos: &mut usize, s: &str| {
            if !text.is_empty() {
                text.push(' ');
                *pos += 1;
            }
            text.push_str(s);
            *pos += s.chars().count();
        };
        for k in 0..spec.mentions_per_paragraph {
            for _ in 0..rng.gen_range(0..3) {
                push(&mut text, &mut pos, FILLER.choose(&mut rng).unwrap());
            }
            let (c, surface) = match PLANTED_MENTIONS[(i / PLANT_EVERY) % 4].get(k) {
                Some((c, s)) if i % PLANT_EVERY == 0 => (*c, s.to_string()),
                _ => {
                    let c = *skewed(&mut rng, &EntityCategory::ALL);
                    (c, skewed(&mut rng, &vocab[c.index()]).clone())
                }
            };
            let start = if text.is_empty() { 0 } else { pos + 1 };
            push(&mut text, &mut pos, &surface);
            mentions.push(EntityMention {
                paragraph_id: pid.clone(),
                start,
                end: pos,
                category: c,
                normalized: normalize_value(&surface, c),
                surface,
            });
        }
        push(&mut text, &mut pos, FILLER.choose(&mut rng).unwrap());
        paragraphs.push(Paragraph::new(pid, article, text));
    }
    let articles = (0..n_articles).map(|a| ArticleMeta {
        article_id: format!("SYN-{a:06}"),
        title: format!("Synthetic article {a}"),
        venue: String::new(),
        year: Some(2000 + (a % 20) as i64),
    });
    KnowledgeBase::new(paragraphs, articles, mentions, Provenance::default()).expect("synthetic KB is valid")
}

/// Paragraph ids holding, for every constraint, a mention whose surface
/// normalizes to the normalized query value. One linear pass over all
/// mentions; sorted by id.
pub fn brute_force_ids(kb: &KnowledgeBase, constraints: &[(EntityCategory, String)]) -> Vec<String> {
    let wanted: Vec<(EntityCategory, String)> = constraints
        .iter()
        .map(|(c, v)| (*c, normalize_value(v, *c)))
        .collect();
    let mut satisfied: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for m in &kb.mentions {
        let key = (m.category, normalize_value(&m.surface, m.category));
        for (i, w) in wanted.iter().enumerate() {
            if *w == key {
                satisfied.entry(m.paragraph_id.as_str()).or_insert_with(|| vec![false; wanted.len()])[i] = true;
            }
        }
    }
    satisfied
        .into_iter()
        .filter(|(_, hits)| hits.iter().all(|h| *h))
        .map(|(pid, _)| pid.to_string())
        .collect()
}

/// A random 1–3 conjunct slot query. Half of the time the constraints are
/// drawn from one paragraph's mentions, so most queries have hits; slot names
/// are spelled with random aliases.
pub fn random_slot_query(rng: &mut ChaCha8Rng, kb: &KnowledgeBase) -> (SlotQuery, Vec<(EntityCategory, String)>) {
    let n = rng.gen_range(1..=3);
    let mut constraints: Vec<(EntityCategory, String)> = Vec::new();
    if rng.gen_bool(0.5) && !kb.mentions.is_empty() {
        let anchor = &kb.mentions[rng.gen_range(0..kb.mentions.len())].paragraph_id;
        let ms: Vec<&EntityMention> = kb.mentions_of(anchor).collect();
        for _ in 0..n {
            let m = ms.choose(rng).unwrap();
            constraints.push((m.category, m.surface.clone()));
        }
    } else {
        for _ in 0..n {
            let c = *EntityCategory::ALL.choose(rng).unwrap();
            constraints.push((c, vocabulary(c).choose(rng).unwrap().clone()));
        }
    }
    let mut q = SlotQuery::default();
    for (c, v) in &constraints {
        let mut names = c.aliases();
        names.push(c.as_str().to_string());
        q = q.slot(names.choose(rng).unwrap(), v);
    }
    (q, constraints)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
