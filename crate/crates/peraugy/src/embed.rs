//! Embedding lookup and the distance-metric family used by perturbation,
//! diversity scoring, and the stability suite.
//!
//! Embeddings are ingested, never computed in-process; [`test_embedder`] is a
//! deterministic stand-in so tests and examples need no external encoder.
//! Values are stored as f32, all distance math runs in f64.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_rng, fnv1a64};
use crate::uig::{DocRecord, SummaryRecord, Uig};

const MAGIC: [u8; 4] = *b"PAEM";
const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("dimension mismatch: {a} vs {b}")]
    DimMismatch { a: usize, b: usize },
    #[error("store holds dim {expected} but {at} has dim {found}")]
    StoreDim { expected: usize, found: usize, at: String },
    #[error("non-finite value in {at}")]
    NonFinite { at: String },
    #[error("cosine distance undefined for a zero vector")]
    ZeroVectorCosine,
    #[error("weighted metric needs {expected} weights, got {found}")]
    WeightLen { expected: usize, found: usize },
    #[error("weights must be positive, got {0} at index {1}")]
    NonPositiveWeight(f64, usize),
    #[error("no embedding for {0}")]
    Missing(EmbedKey),
    #[error("not an embedding store file (bad magic)")]
    BadMagic,
    #[error("unsupported store version {0}")]
    BadVersion(u16),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Fixed-length real vector; all entries finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVec {
    pub values: Vec<f32>,
}

impl EmbeddingVec {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { at: format!("entry {i}") });
        }
        Ok(EmbeddingVec { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Everything the pipeline embeds, in one key space.
///
/// `Text` keys raw strings by their 64-bit FNV-1a hash; they back the
/// title-as-summary surrogate at interval openings and any ad-hoc text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedKey {
    Doc { id: String },
    Summary { id: String },
    Sentence { doc: String, index: u32 },
    Text { hash: u64 },
}

impl EmbedKey {
    pub fn text(s: &str) -> Self {
        EmbedKey::Text { hash: fnv1a64(s.as_bytes()) }
    }
}

impl fmt::Display for EmbedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedKey::Doc { id } => write!(f, "doc {id}"),
            EmbedKey::Summary { id } => write!(f, "summary {id}"),
            EmbedKey::Sentence { doc, index } => write!(f, "sentence {index} of doc {doc}"),
            EmbedKey::Text { hash } => write!(f, "text {hash:016x}"),
        }
    }
}

/// Distance family. Weighted Manhattan carries per-coordinate weights and is
/// what the stability suite distorts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Manhattan,
    Euclidean,
    Rmsd,
    Cosine,
    WeightedManhattan(Vec<f64>),
}

impl Default for DistanceMetric {
    fn default() -> Self {
        DistanceMetric::Manhattan
    }
}

/// Distance between two vectors of equal dimension. Symmetric; zero iff the
/// arguments are equal for Manhattan/Euclidean/Rmsd. Euclidean = sqrt(d)*Rmsd.
pub fn distance(m: &DistanceMetric, a: &EmbeddingVec, b: &EmbeddingVec) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimMismatch { a: a.dim(), b: b.dim() });
    }
    let d = a.dim();
    let pairs = || a.values.iter().zip(&b.values).map(|(&x, &y)| (x as f64, y as f64));
    let val = match m {
        DistanceMetric::Manhattan => pairs().map(|(x, y)| (x - y).abs()).sum(),
        DistanceMetric::Euclidean => pairs().map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        DistanceMetric::Rmsd => {
            if d == 0 {
                0.0
            } else {
                (pairs().map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / d as f64).sqrt()
            }
        }
        DistanceMetric::Cosine => {
            let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
            for (x, y) in pairs() {
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            if na == 0.0 || nb == 0.0 {
                return Err(EmbedError::ZeroVectorCosine);
            }
            1.0 - dot / (na.sqrt() * nb.sqrt())
        }
        DistanceMetric::WeightedManhattan(w) => {
            if w.len() != d {
                return Err(EmbedError::WeightLen { expected: d, found: w.len() });
            }
            if let Some((i, &bad)) = w.iter().enumerate().find(|(_, &w)| !(w > 0.0)) {
                return Err(EmbedError::NonPositiveWeight(bad, i));
            }
            pairs().zip(w).map(|((x, y), w)| w * (x - y).abs()).sum()
        }
    };
    Ok(val)
}

/// Deterministic stand-in for an external sentence encoder. Equal texts give
/// equal vectors; entries lie in [-1, 1].
pub fn test_embedder(text: &str, dim: usize, seed: u64) -> EmbeddingVec {
    assert!(dim >= 2, "test_embedder requires dim >= 2, got {dim}");
    let mut rng = derive_rng(seed, &["embed", text]);
    let values = (0..dim).map(|_| rng.gen_range(-1.0f32..=1.0)).collect();
    EmbeddingVec { values }
}

/// Read-only after load; concurrent lookups are fine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStore {
    dim: usize,
    pub note: String,
    // structured keys cannot be JSON object keys, so entries ship as pairs
    #[serde(with = "entries_as_pairs")]
    entries: BTreeMap<EmbedKey, EmbeddingVec>,
}

mod entries_as_pairs {
    use super::{EmbedKey, EmbeddingVec};
    use serde::{Deserialize, Deserializer, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(map: &BTreeMap<EmbedKey, EmbeddingVec>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<EmbedKey, EmbeddingVec>, D::Error> {
        let pairs: Vec<(EmbedKey, EmbeddingVec)> = Deserialize::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

impl EmbeddingStore {
    pub fn new(dim: usize, note: impl Into<String>) -> Self {
        EmbeddingStore { dim, note: note.into(), entries: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, key: EmbedKey, vec: EmbeddingVec) -> Result<(), EmbedError> {
        if vec.dim() != self.dim {
            return Err(EmbedError::StoreDim { expected: self.dim, found: vec.dim(), at: key.to_string() });
        }
        if vec.values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { at: key.to_string() });
        }
        self.entries.insert(key, vec);
        Ok(())
    }

    pub fn get(&self, key: &EmbedKey) -> Option<&EmbeddingVec> {
        self.entries.get(key)
    }

    /// Lookup that treats absence as a hard error; the pipeline checks all
    /// keys it will need up front via this method.
    pub fn require(&self, key: &EmbedKey) -> Result<&EmbeddingVec, EmbedError> {
        self.entries.get(key).ok_or_else(|| EmbedError::Missing(key.clone()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &EmbedKey> {
        self.entries.keys()
    }

    /// Populates a store covering every key the pipeline can request for
    /// `uig`: one vector per doc, per stored sentence, per summary, and one
    /// text vector per doc title (the surrogate at interval openings).
    pub fn synthesize(uig: &Uig, dim: usize, seed: u64) -> Self {
        let mut store = EmbeddingStore::new(dim, format!("synthetic test embedder, seed {seed}"));
        let put = |store: &mut Self, key: EmbedKey, text: &str| {
            // insert cannot fail here: test_embedder output is finite and dim-exact
            store.insert(key, test_embedder(text, dim, seed)).expect("synthetic vector");
        };
        for doc in uig.docs.values() {
            put(&mut store, EmbedKey::Doc { id: doc.id.clone() }, &doc_text(doc));
            put(&mut store, EmbedKey::text(&doc.title), &doc.title);
            for (i, sent) in doc.body.iter().enumerate() {
                put(&mut store, EmbedKey::Sentence { doc: doc.id.clone(), index: i as u32 }, sent);
            }
        }
        for s in uig.summaries.values() {
            put(&mut store, EmbedKey::Summary { id: s.id.clone() }, &s.text);
        }
        store
    }

    /// Binary format: magic, version, dim, note, count, then records
    /// {tagged key, f32 values}.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        write_str(&mut w, &self.note)?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for (key, vec) in &self.entries {
            match key {
                EmbedKey::Doc { id } => {
                    w.write_all(&[0u8])?;
                    write_str(&mut w, id)?;
                }
                EmbedKey::Summary { id } => {
                    w.write_all(&[1u8])?;
                    write_str(&mut w, id)?;
                }
                EmbedKey::Sentence { doc, index } => {
                    w.write_all(&[2u8])?;
                    write_str(&mut w, doc)?;
                    w.write_all(&index.to_le_bytes())?;
                }
                EmbedKey::Text { hash } => {
                    w.write_all(&[3u8])?;
                    w.write_all(&hash.to_le_bytes())?;
                }
            }
            for v in &vec.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(EmbedError::BadMagic);
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(EmbedError::BadVersion(version));
        }
        let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let note = read_str(&mut r)?;
        let count = u64::from_le_bytes(read_array(&mut r)?);
        let mut store = EmbeddingStore::new(dim, note);
        for _ in 0..count {
            let tag = u8::from_le_bytes(read_array(&mut r)?);
            let key = match tag {
                0 => EmbedKey::Doc { id: read_str(&mut r)? },
                1 => EmbedKey::Summary { id: read_str(&mut r)? },
                2 => EmbedKey::Sentence { doc: read_str(&mut r)?, index: u32::from_le_bytes(read_array(&mut r)?) },
                3 => EmbedKey::Text { hash: u64::from_le_bytes(read_array(&mut r)?) },
                other => {
                    return Err(EmbedError::Io(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("unknown key tag {other}"),
                    )))
                }
            };
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                values.push(f32::from_le_bytes(read_array(&mut r)?));
            }
            store.insert(key, EmbeddingVec { values })?;
        }
        Ok(store)
    }

    /// Human-readable debug serialization of the same data.
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let r = BufReader::new(File::open(path)?);
        let store: EmbeddingStore = serde_json::from_reader(r)?;
        for (key, vec) in &store.entries {
            if vec.dim() != store.dim {
                return Err(EmbedError::StoreDim { expected: store.dim, found: vec.dim(), at: key.to_string() });
            }
            if vec.values.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::NonFinite { at: key.to_string() });
            }
        }
        Ok(store)
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> Result<String, EmbedError> {
    let len = u32::from_le_bytes(read_array(r)?) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf)
        .map_err(|e| EmbedError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Text a d-node is embedded as: title plus the head of the body.
pub fn doc_text(doc: &DocRecord) -> String {
    match doc.body.first() {
        Some(head) => format!("{} {head}", doc.title),
        None => doc.title.clone(),
    }
}

pub fn doc_vec<'a>(store: &'a EmbeddingStore, doc: &DocRecord) -> Result<&'a EmbeddingVec, EmbedError> {
    let key = EmbedKey::Doc { id: doc.id.clone() };
    if let Some(v) = store.get(&key) {
        return Ok(v);
    }
    store.require(&EmbedKey::text(&doc_text(doc)))
}

/// Title-as-summary surrogate used at interval openings.
pub fn title_vec<'a>(store: &'a EmbeddingStore, doc: &DocRecord) -> Result<&'a EmbeddingVec, EmbedError> {
    store.require(&EmbedKey::text(&doc.title))
}

pub fn sentence_vec<'a>(
    store: &'a EmbeddingStore,
    doc: &DocRecord,
    index: u32,
) -> Result<&'a EmbeddingVec, EmbedError> {
    let key = EmbedKey::Sentence { doc: doc.id.clone(), index };
    if let Some(v) = store.get(&key) {
        return Ok(v);
    }
    match doc.body.get(index as usize) {
        Some(sent) => store.require(&EmbedKey::text(sent)),
        None => Err(EmbedError::Missing(key)),
    }
}

/// Summaries created by perturbation are verbatim stored sentences, so a
/// store built from the seed pool still covers them via their sentence ref.
pub fn summary_vec<'a>(store: &'a EmbeddingStore, s: &SummaryRecord) -> Result<&'a EmbeddingVec, EmbedError> {
    let key = EmbedKey::Summary { id: s.id.clone() };
    if let Some(v) = store.get(&key) {
        return Ok(v);
    }
    if let Some(r) = &s.source_sentence {
        let skey = EmbedKey::Sentence { doc: r.doc.clone(), index: r.index };
        if let Some(v) = store.get(&skey) {
            return Ok(v);
        }
    }
    store.require(&EmbedKey::text(&s.text))
}
