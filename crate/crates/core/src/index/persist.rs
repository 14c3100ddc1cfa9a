//! `index.bin` layout, all integers little-endian:
//!
//! ```text
//! header        magic "MATKBIDX" (8 bytes), format version u32
//! ordinal table u32 N, then per paragraph in ordinal order:
//!               str paragraph_id, str article_id, str text, u32 doc_length,
//!               u32 mention count, per mention: u32 start, u32 end,
//!               u8 category index, str normalized value
//! slot dict     13 blocks in category order: u32 key count, then per key
//!               (keys sorted): str value, u32 posting count, u32 byte length,
//!               posting block = delta-coded LEB128 ordinals
//! token dict    u32 term count, then per term (sorted): str term,
//!               u32 posting count, u32 byte length, posting block =
//!               LEB128 pairs (ordinal delta, term frequency)
//! checksum      SHA-256 of every preceding byte (32 bytes)
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8. Loaders reject other
//! magic, other versions, and checksum or structure failures.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::postings::{read_varint, write_varint};
use super::{SlotIndex, StoredDoc, StoredMention};
use crate::tagger::EntityCategory;

pub const MAGIC: &[u8; 8] = b"MATKBIDX";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("not an index file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported index format version {0} (this build reads {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("index checksum mismatch")]
    ChecksumMismatch,
    #[error("index file truncated")]
    Truncated,
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("section fits in u32"));
    }

    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn block(&mut self, count: usize, bytes: &[u8]) {
        self.len(count);
        self.len(bytes.len());
        self.buf.extend_from_slice(bytes);
    }
}

fn sorted_keys<V>(m: &HashMap<String, V>) -> Vec<&String> {
    let mut keys: Vec<&String> = m.keys().collect();
    keys.sort();
    keys
}

pub fn to_bytes(idx: &SlotIndex) -> Vec<u8> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);

    w.len(idx.docs.len());
    for (doc, &dl) in idx.docs.iter().zip(&idx.doc_lengths) {
        w.str(&doc.paragraph_id);
        w.str(&doc.article_id);
        w.str(&doc.text);
        w.u32(dl);
        w.len(doc.mentions.len());
        for m in &doc.mentions {
            w.u32(m.start);
            w.u32(m.end);
            w.u8(m.category.index() as u8);
            w.str(&m.normalized);
        }
    }

    for category in EntityCategory::ALL {
        let postings = &idx.slot_postings[category.index()];
        let keys = sorted_keys(postings);
        w.len(keys.len());
        for key in keys {
            let list = &postings[key];
            let mut block = Vec::new();
            let mut prev = 0u32;
            for &o in list {
                write_varint(&mut block, u64::from(o - prev));
                prev = o;
            }
            w.str(key);
            w.block(list.len(), &block);
        }
    }

    let terms = sorted_keys(&idx.token_postings);
    w.len(terms.len());
    for term in terms {
        let list = &idx.token_postings[term];
        let mut block = Vec::new();
        let mut prev = 0u32;
        for &(o, tf) in list {
            write_varint(&mut block, u64::from(o - prev));
            write_varint(&mut block, u64::from(tf));
            prev = o;
        }
        w.str(term);
        w.block(list.len(), &block);
    }

    let digest = Sha256::digest(&w.buf);
    w.buf.extend_from_slice(&digest);
    w.buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).ok_or(IndexError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(IndexError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize, IndexError> {
        Ok(self.u32()? as usize)
    }

    fn str(&mut self) -> Result<String, IndexError> {
        let n = self.len()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| IndexError::Corrupt("invalid UTF-8".into()))
    }

    fn block(&mut self) -> Result<(usize, &'a [u8]), IndexError> {
        let count = self.len()?;
        let n = self.len()?;
        Ok((count, self.take(n)?))
    }
}

fn corrupt(msg: impl Into<String>) -> IndexError {
    IndexError::Corrupt(msg.into())
}

fn varints(mut block: &[u8]) -> impl Iterator<Item = Result<u64, IndexError>> + '_ {
    std::iter::from_fn(move || {
        if block.is_empty() {
            return None;
        }
        Some(match read_varint(block) {
            Some((v, used)) => {
                block = &block[used..];
                Ok(v)
            }
            None => Err(corrupt("bad varint")),
        })
    })
}

/// Resolves ordinal deltas, checking they are strictly increasing and below `n_docs`.
fn ordinals_from_deltas(deltas: &[u64], n_docs: usize) -> Result<Vec<u32>, IndexError> {
    let mut out = Vec::with_capacity(deltas.len());
    let mut prev: Option<u64> = None;
    for &delta in deltas {
        let o = match prev {
            None => delta,
            Some(p) if delta > 0 => p.checked_add(delta).ok_or_else(|| corrupt("ordinal overflow"))?,
            Some(_) => return Err(corrupt("posting list not strictly increasing")),
        };
        if o >= n_docs as u64 {
            return Err(corrupt("posting ordinal out of range"));
        }
        out.push(o as u32);
        prev = Some(o);
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<SlotIndex, IndexError> {
    if bytes.len() < MAGIC.len() + 4 {
        return Err(if bytes.starts_with(&MAGIC[..bytes.len().min(8)]) {
            IndexError::Truncated
        } else {
            IndexError::BadMagic
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(IndexError::UnsupportedVersion(version));
    }
    if bytes.len() < 12 + CHECKSUM_LEN {
        return Err(IndexError::Truncated);
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(IndexError::ChecksumMismatch);
    }

    let mut r = Reader { buf: body, pos: 12 };
    let n = r.len()?;
    let mut idx = SlotIndex {
        slot_postings: vec![HashMap::new(); EntityCategory::COUNT],
        ..Default::default()
    };
    for _ in 0..n {
        let paragraph_id = r.str()?;
        let article_id = r.str()?;
        let text = r.str()?;
        let dl = r.u32()?;
        let n_mentions = r.len()?;
        let n_chars = text.chars().count() as u32;
        let mut mentions = Vec::with_capacity(n_mentions.min(1 << 16));
        for _ in 0..n_mentions {
            let start = r.u32()?;
            let end = r.u32()?;
            let category = EntityCategory::from_index(r.u8()? as usize).ok_or_else(|| corrupt("bad category"))?;
            if start >= end || end > n_chars {
                return Err(corrupt(format!("mention span out of range in {paragraph_id}")));
            }
            mentions.push(StoredMention {
                start,
                end,
                category,
                normalized: r.str()?,
            });
        }
        idx.doc_lengths.push(dl);
        idx.docs.push(StoredDoc {
            paragraph_id,
            article_id,
            text,
            mentions,
        });
    }
    if idx.docs.windows(2).any(|w| w[0].paragraph_id >= w[1].paragraph_id) {
        return Err(corrupt("ordinal table not sorted by paragraph id"));
    }

    for category in EntityCategory::ALL {
        let keys = r.len()?;
        let map = &mut idx.slot_postings[category.index()];
        for _ in 0..keys {
            let key = r.str()?;
            let (count, block) = r.block()?;
            let deltas: Vec<u64> = varints(block).collect::<Result<_, _>>()?;
            if deltas.len() != count {
                return Err(corrupt("posting count mismatch"));
            }
            map.insert(key, ordinals_from_deltas(&deltas, n)?);
        }
    }

    let terms = r.len()?;
    for _ in 0..terms {
        let term = r.str()?;
        let (count, block) = r.block()?;
        let values: Vec<u64> = varints(block).collect::<Result<_, _>>()?;
        if values.len() != count * 2 {
            return Err(corrupt("token posting count mismatch"));
        }
        let deltas: Vec<u64> = values.iter().step_by(2).copied().collect();
        let ords = ordinals_from_deltas(&deltas, n)?;
        let postings = ords
            .into_iter()
            .zip(values.iter().skip(1).step_by(2))
            .map(|(o, &tf)| u32::try_from(tf).map(|tf| (o, tf)).map_err(|_| corrupt("term frequency overflow")))
            .collect::<Result<Vec<_>, _>>()?;
        idx.token_postings.insert(term, postings);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes before checksum"));
    }
    idx.finish();
    Ok(idx)
}

pub fn save_index(idx: &SlotIndex, path: &Path) -> Result<(), IndexError> {
    let io = |source| IndexError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension("bin.tmp");
    fs::write(&tmp, to_bytes(idx)).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn load_index(path: &Path) -> Result<SlotIndex, IndexError> {
    let bytes = fs::read(path).map_err(|source| IndexError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;
    use crate::ingest::Paragraph;
    use crate::kb::{KnowledgeBase, Provenance};
    use crate::tagger::{tag_corpus, TaggerConfig};

    fn sample() -> SlotIndex {
        let paragraphs: Vec<Paragraph> = [
            "Co3O4 powder from Sigma-Aldrich was sintered at 700 °C for 24 h",
            "LaFeAsO was prepared in an evacuated quartz tube at 1150 °C",
            "Li2Co3 and Co3O4 were ground together and pressed into pellets, then fired at 1000 °C in air",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| Paragraph::new(format!("B#{i}"), "B".into(), t.to_string()))
        .collect();
        let mentions = tag_corpus(&paragraphs, &TaggerConfig::builtin());
        build_index(&KnowledgeBase::new(paragraphs, [], mentions, Provenance::default()).unwrap())
    }

    #[test]
    fn round_trip_is_lossless_and_deterministic() {
        let idx = sample();
        let bytes = to_bytes(&idx);
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back, idx);
        assert_eq!(to_bytes(&back), bytes);
        assert_eq!(to_bytes(&sample()), bytes);
    }

    #[test]
    fn rejects_damage() {
        let bytes = to_bytes(&sample());
        let mut flipped = bytes.clone();
        flipped[40] ^= 0x10;
        assert!(matches!(from_bytes(&flipped), Err(IndexError::ChecksumMismatch)));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(from_bytes(&magic), Err(IndexError::BadMagic)));

        let mut version = bytes.clone();
        version[8] = 9;
        assert!(matches!(from_bytes(&version), Err(IndexError::UnsupportedVersion(9))));

        assert!(matches!(from_bytes(&bytes[..6]), Err(IndexError::Truncated)));
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 1]), Err(IndexError::ChecksumMismatch)));
    }

    #[test]
    fn empty_index_round_trips() {
        let idx = build_index(&KnowledgeBase::default());
        let back = from_bytes(&to_bytes(&idx)).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.len(), 0);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        let idx = sample();
        save_index(&idx, &path).unwrap();
        assert_eq!(load_index(&path).unwrap(), idx);
    }
}
