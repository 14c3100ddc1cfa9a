use std::collections::BTreeMap;
use std::fs;

use matkb_core::ingest::{ingest_corpus, write_paragraphs};
use matkb_core::kb::{load_kb, save_kb, KbError, MENTIONS_FILE, PARAGRAPHS_FILE};
use matkb_core::tagger::import::import_mentions;
use matkb_core::tagger::{tag_corpus, TaggerConfig};
use matkb_core::{EntityCategory, Paragraph};
use matkb_testkit::{synth_kb, SynthSpec};

fn corpus() -> BTreeMap<String, Paragraph> {
    (0..20)
        .map(|i| {
            let p = Paragraph::new(
                format!("A#{i}"),
                "A".into(),
                format!("Co3O4 was heated at {}°C in a tube furnace", 500 + i * 10),
            );
            (p.paragraph_id.clone(), p)
        })
        .collect()
}

#[test]
fn hundred_records_seven_corrupted() {
    let corpus = corpus();
    let mut lines: Vec<String> = Vec::new();
    for i in 0..100 {
        let pid = format!("A#{}", i % 20);
        let line = match i % 4 {
            0 => format!(r#"{{"paragraph_id":"{pid}","start":0,"end":5,"category":"Material-recipe","surface":"Co3O4"}}"#),
            1 => format!(r#"{{"paragraph_id":"{pid}","start":31,"end":43,"category":"Device","surface":"tube furnace"}}"#),
            2 => format!(r#"{{"paragraph_id":"{pid}","start":10,"end":16,"category":"operation","surface":"heated"}}"#),
            _ => format!(
                r#"{{"paragraph_id":"{pid}","start":20,"end":25,"category":"Material_temperature","surface":"{}°C"}}"#,
                500 + (i % 20) * 10
            ),
        };
        lines.push(line);
    }
    let corrupt: [(usize, &str); 7] = [
        (3, r#"{"paragraph_id":"Z#9","start":0,"end":5,"category":"Material-recipe","surface":"Co3O4"}"#),
        (11, r#"{"paragraph_id":"A#1","start":0,"end":5,"category":"Colour","surface":"Co3O4"}"#),
        (20, r#"{"paragraph_id":"A#2","start":5,"end":5,"category":"Device","surface":""}"#),
        (42, r#"{"paragraph_id":"A#3","start":40,"end":400,"category":"Device","surface":"x"}"#),
        (57, r#"{"paragraph_id":"A#4","start":0,"end":5,"category":"Material-recipe","surface":"Co3O5"}"#),
        (68, r#"{"paragraph_id": "A#5", "start": "#),
        (99, r#"{"paragraph_id":"A#6","start":16,"end":10,"category":"Operation","surface":"heated"}"#),
    ];
    for (at, bad) in corrupt {
        lines[at] = bad.to_string();
    }
    let source = lines.join("\n") + "\n";
    let (mentions, report) = import_mentions(source.as_bytes(), &corpus);
    assert_eq!(report.rejections.len(), 7);
    assert_eq!(report.accepted, 93);
    assert_eq!(mentions.len(), 93);
    let rejected_lines: Vec<usize> = report.rejections.iter().map(|r| r.line).collect();
    assert_eq!(rejected_lines, [4, 12, 21, 43, 58, 69, 100]);
    for m in &mentions {
        let text = &corpus[&m.paragraph_id].text;
        let slice: String = text.chars().skip(m.start).take(m.end - m.start).collect();
        assert_eq!(slice, m.surface);
    }
    assert!(mentions.iter().any(|m| m.category == EntityCategory::Operation));
    assert!(mentions.iter().any(|m| m.normalized == "530 °C"));
    let reasons: Vec<&str> = report.rejections.iter().map(|r| r.reason.as_str()).collect();
    assert!(reasons.contains(&"surface mismatch"), "{reasons:?}");
}

fn sample_input() -> String {
    let mut s = String::new();
    for a in 0..30 {
        if a % 3 == 0 {
            s += &format!(
                "{{\"article_id\":\"X{a}\",\"title\":\"T {a}\",\"body_text\":\"First  para of {a} at 700\u{2103}.\\n\\n\\nSecond\\tpara.\\n \\nThird.\"}}\n"
            );
        } else {
            s += &format!(
                "{{\"article_id\":\"X{a}\",\"year\":2001,\"paragraphs\":[\"Cafe\u{301} para {a}\",\"  \",\"700\u{b0}\u{a0}C end\"]}}\n"
            );
        }
        if a == 7 {
            s += "not json\n\n";
        }
    }
    s
}

#[test]
fn ingest_is_idempotent_and_deterministic() {
    let input = sample_input();
    let (first, report) = ingest_corpus(input.as_bytes()).unwrap();
    assert_eq!(report.issues.len(), 1);
    let (again, _) = ingest_corpus(input.as_bytes()).unwrap();
    assert_eq!(first, again);

    let reserialized: String = first.iter().map(|r| r.to_input_line() + "\n").collect();
    let (second, report2) = ingest_corpus(reserialized.as_bytes()).unwrap();
    assert!(report2.is_empty());
    assert_eq!(first, second);

    let dump = |recs: &[matkb_core::ArticleRecord]| {
        let mut out = Vec::new();
        write_paragraphs(&mut out, recs.iter().flat_map(|r| &r.paragraphs)).unwrap();
        out
    };
    assert_eq!(dump(&first), dump(&second));

    let x0 = &first[0].paragraphs;
    assert_eq!(x0.len(), 3);
    assert_eq!(x0[0].text, "First para of 0 at 700°C.");
    assert_eq!(x0[1].paragraph_id, "X0#1");
    let x1 = &first[1].paragraphs;
    assert_eq!(x1.len(), 2);
    assert_eq!(x1[0].text, "Café para 1");
    assert_eq!(x1[1].text, "700°C end");
}

#[test]
fn kb_round_trip_and_checksum() {
    let kb = synth_kb(SynthSpec {
        paragraphs: 300,
        mentions_per_paragraph: 5,
        seed: 3,
    });
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    save_kb(&kb, &a).unwrap();
    let loaded = load_kb(&a).unwrap();
    assert_eq!(loaded, kb);
    save_kb(&loaded, &b).unwrap();
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }

    for file in [MENTIONS_FILE, PARAGRAPHS_FILE] {
        let path = b.join(file);
        let mut bytes = fs::read(&path).unwrap();
        let original = bytes.clone();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x01;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_kb(&b), Err(KbError::ChecksumMismatch(_))), "{file}");
        fs::write(&path, original).unwrap();
    }
    assert!(load_kb(&b).is_ok());
}

#[test]
fn tagging_is_deterministic_and_spans_valid() {
    let kb = synth_kb(SynthSpec {
        paragraphs: 200,
        mentions_per_paragraph: 6,
        seed: 4,
    });
    let paragraphs: Vec<Paragraph> = kb.paragraphs.values().cloned().collect();
    let config = TaggerConfig::builtin();
    let a = tag_corpus(&paragraphs, &config);
    let b = tag_corpus(&paragraphs, &config);
    assert_eq!(a, b);
    assert!(a.len() > 500);
    for m in &a {
        let text = &kb.paragraphs[&m.paragraph_id].text;
        let slice: String = text.chars().skip(m.start).take(m.end - m.start).collect();
        assert_eq!(slice, m.surface);
        assert!(!m.normalized.is_empty());
    }
}
