//! Embeddings, the exact cosine index, and its binary file format.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::rdf::Iri;

pub const DEFAULT_DIMENSION: usize = 256;
pub const MAGIC: &[u8; 8] = b"ONSETIDX";
pub const FORMAT_VERSION: u32 = 1;

/// Fixed-length vector that is either all-zero or unit length.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dimension: usize) -> Self {
        EmbeddingVector(vec![0.0; dimension])
    }

    /// Scales `values` to unit length; an all-zero input stays zero.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector(values)
    }

    /// Wraps values that already satisfy the unit-or-zero invariant.
    pub fn from_raw(values: Vec<f64>) -> Self {
        EmbeddingVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Normalized mean of `vectors`; zero when the mean is zero.
    pub fn mean<'a>(vectors: impl IntoIterator<Item = &'a EmbeddingVector>, dimension: usize) -> Self {
        let mut sum = vec![0.0; dimension];
        let mut n = 0usize;
        for v in vectors {
            for (s, x) in sum.iter_mut().zip(&v.0) {
                *s += x;
            }
            n += 1;
        }
        if n > 0 {
            sum.iter_mut().for_each(|x| *x /= n as f64);
        }
        EmbeddingVector::normalized(sum)
    }
}

impl fmt::Debug for EmbeddingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EmbeddingVector(d={}, norm={:.6})", self.dimension(), self.norm())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("embedding request timed out")]
    Timeout,
    #[error("invalid embedding response: {0}")]
    InvalidResponse(String),
}

/// Source of text embeddings.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text.to_string()])?;
        out.pop().ok_or_else(|| EmbedError::InvalidResponse("empty batch".into()))
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Signed feature hashing of lowercased character trigrams.
pub fn embed_offline(text: &str, dimension: usize) -> EmbeddingVector {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut values = vec![0.0; dimension];
    let mut buf = String::new();
    for window in chars.windows(3) {
        buf.clear();
        buf.extend(window);
        let h = fnv1a64(buf.as_bytes());
        let bucket = (h % dimension as u64) as usize;
        values[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    EmbeddingVector::normalized(values)
}

#[derive(Debug, Clone)]
pub struct OfflineEmbedder {
    pub dimension: usize,
    pub exec: Exec,
}

impl OfflineEmbedder {
    pub fn new(dimension: usize) -> Self {
        OfflineEmbedder {
            dimension,
            exec: Exec::default(),
        }
    }
}

impl Embedder for OfflineEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(self.exec.map(texts, |t| embed_offline(t, self.dimension)))
    }
}

pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    if u.dimension() != v.dimension() {
        return Err(EmbedError::DimensionMismatch {
            expected: u.dimension(),
            found: v.dimension(),
        });
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Class,
    Link,
    Topic,
}

impl DocumentKind {
    fn to_byte(self) -> u8 {
        match self {
            DocumentKind::Class => 0,
            DocumentKind::Link => 1,
            DocumentKind::Topic => 2,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(DocumentKind::Class),
            1 => Some(DocumentKind::Link),
            2 => Some(DocumentKind::Topic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedDocument {
    pub key: Iri,
    pub kind: DocumentKind,
    pub text: String,
    pub vector: EmbeddingVector,
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an index file of format version {FORMAT_VERSION} (found {found})")]
    FormatVersionMismatch { found: String },
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error("vector of dimension {found} in an index of dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate {kind:?} entry <{key}>")]
    DuplicateKey { kind: DocumentKind, key: Iri },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    entries: Vec<IndexedDocument>,
}

impl VectorIndex {
    pub fn new(dimension: usize) -> Self {
        VectorIndex {
            dimension,
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, doc: IndexedDocument) -> Result<(), IndexError> {
        if doc.vector.dimension() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                found: doc.vector.dimension(),
            });
        }
        if self.get(doc.kind, &doc.key).is_some() {
            return Err(IndexError::DuplicateKey {
                kind: doc.kind,
                key: doc.key,
            });
        }
        self.entries.push(doc);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[IndexedDocument] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, kind: DocumentKind, key: &Iri) -> Option<&IndexedDocument> {
        self.entries.iter().find(|e| e.kind == kind && &e.key == key)
    }
}

/// Descending score, then ascending key bytes.
pub fn rank_order(a: &(Iri, f64), b: &(Iri, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1)
        .then_with(|| a.0.as_str().as_bytes().cmp(b.0.as_str().as_bytes()))
}

/// The `k` best entries accepted by `filter`, best first.
pub fn top_k_by<F>(index: &VectorIndex, query: &EmbeddingVector, k: usize, exec: Exec, filter: F) -> Vec<(Iri, f64)>
where
    F: Fn(&IndexedDocument) -> bool + Sync + Send,
{
    let scored: Vec<Option<(Iri, f64)>> = exec.map(&index.entries, |e| {
        filter(e).then(|| (e.key.clone(), cosine(query, &e.vector).unwrap_or(0.0)))
    });
    let mut scored: Vec<(Iri, f64)> = scored.into_iter().flatten().collect();
    if k == 0 {
        return Vec::new();
    }
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
    scored
}

/// The `k` highest-cosine entries whose kind is in `kinds` (all kinds when empty).
pub fn top_k(
    index: &VectorIndex,
    query: &EmbeddingVector,
    k: usize,
    kinds: &[DocumentKind],
    exec: Exec,
) -> Vec<(Iri, f64)> {
    top_k_by(index, query, k, exec, |e| kinds.is_empty() || kinds.contains(&e.kind))
}

/// A named opaque section stored after the entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub tag: [u8; 4],
    pub payload: Vec<u8>,
}

pub fn encode_index(index: &VectorIndex, sections: &[Section]) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + index.len() * (index.dimension * 8 + 64));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dimension as u32).to_le_bytes());
    out.extend_from_slice(&(index.entries.len() as u64).to_le_bytes());
    for e in &index.entries {
        out.push(e.kind.to_byte());
        for s in [e.key.as_str(), e.text.as_str()] {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        for x in e.vector.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out.extend_from_slice(&(sections.len() as u32).to_le_bytes());
    for s in sections {
        out.extend_from_slice(&s.tag);
        out.extend_from_slice(&(s.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&s.payload);
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| IndexError::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|e| IndexError::Corrupt(e.to_string()))
    }
}

pub fn decode_index(bytes: &[u8]) -> Result<(VectorIndex, Vec<Section>), IndexError> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic = c.take(8).map_err(|_| IndexError::FormatVersionMismatch {
        found: "short header".into(),
    })?;
    if magic != MAGIC {
        return Err(IndexError::FormatVersionMismatch {
            found: format!("magic {:?}", String::from_utf8_lossy(magic)),
        });
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(IndexError::FormatVersionMismatch {
            found: format!("version {version}"),
        });
    }
    let dimension = c.u32()? as usize;
    let count = c.u64()?;
    let mut index = VectorIndex::new(dimension);
    for _ in 0..count {
        let kind_byte = c.take(1)?[0];
        let kind = DocumentKind::from_byte(kind_byte)
            .ok_or_else(|| IndexError::Corrupt(format!("unknown entry kind {kind_byte}")))?;
        let key = Iri::new(c.string()?).map_err(|e| IndexError::Corrupt(e.to_string()))?;
        let text = c.string()?;
        let raw = c.take(dimension * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        index.insert(IndexedDocument {
            key,
            kind,
            text,
            vector: EmbeddingVector::from_raw(values),
        })?;
    }
    let section_count = c.u32()?;
    let mut sections = Vec::with_capacity(section_count as usize);
    for _ in 0..section_count {
        let tag: [u8; 4] = c.take(4)?.try_into().expect("4 bytes");
        let len = c.u64()? as usize;
        sections.push(Section {
            tag,
            payload: c.take(len)?.to_vec(),
        });
    }
    if c.pos != bytes.len() {
        return Err(IndexError::Corrupt(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok((index, sections))
}

pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), IndexError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_index(index, &[]))?;
    f.sync_all()?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<VectorIndex, IndexError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_index(&bytes).map(|(index, _)| index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/{s}")).unwrap()
    }

    fn doc(key: &str, values: Vec<f64>) -> IndexedDocument {
        IndexedDocument {
            key: iri(key),
            kind: DocumentKind::Link,
            text: key.to_string(),
            vector: EmbeddingVector::normalized(values),
        }
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn offline_embedding_basics() {
        assert!(embed_offline("", 256).is_zero());
        assert!(embed_offline("ab", 256).is_zero());
        let v = embed_offline("athlete club", 256);
        assert_eq!(v.dimension(), 256);
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-9);
        assert_eq!(embed_offline("Athlete Club", 256), v);
    }

    #[test]
    fn cosine_rules() {
        let e = |v: Vec<f64>| EmbeddingVector::normalized(v);
        assert_abs_diff_eq!(cosine(&e(vec![1.0, 0.0]), &e(vec![0.0, 1.0])).unwrap(), 0.0);
        let u = embed_offline("birth date", 64);
        assert_abs_diff_eq!(cosine(&u, &u).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(cosine(&u, &EmbeddingVector::zeros(64)).unwrap(), 0.0);
        assert!(matches!(
            cosine(&u, &EmbeddingVector::zeros(3)),
            Err(EmbedError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ranking_and_ties() {
        let mut index = VectorIndex::new(2);
        index.insert(doc("a", vec![1.0, 0.0])).unwrap();
        index.insert(doc("b", vec![0.0, 1.0])).unwrap();
        let q = EmbeddingVector::normalized(vec![1.0, 0.0]);
        assert_eq!(
            top_k(&index, &q, 2, &[], Exec::Sequential),
            vec![(iri("a"), 1.0), (iri("b"), 0.0)]
        );
        let mut same = VectorIndex::new(2);
        for key in ["e", "c", "d", "a", "b"] {
            same.insert(doc(key, vec![1.0, 1.0])).unwrap();
        }
        let keys: Vec<Iri> = top_k(&same, &q, 3, &[], Exec::Parallel).into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, vec![iri("a"), iri("b"), iri("c")]);
        assert_eq!(top_k(&same, &q, 10, &[], Exec::Sequential).len(), 5);
        assert!(top_k(&same, &q, 3, &[DocumentKind::Class], Exec::Sequential).is_empty());
    }

    #[test]
    fn insert_rules() {
        let mut index = VectorIndex::new(2);
        index.insert(doc("a", vec![1.0, 0.0])).unwrap();
        assert!(matches!(
            index.insert(doc("a", vec![0.0, 1.0])),
            Err(IndexError::DuplicateKey { .. })
        ));
        let mut class_a = doc("a", vec![0.0, 1.0]);
        class_a.kind = DocumentKind::Class;
        index.insert(class_a).unwrap();
        assert!(matches!(
            index.insert(doc("z", vec![1.0])),
            Err(IndexError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.idx");
        save_index(&VectorIndex::new(8), &path).unwrap();
        assert_eq!(load_index(&path).unwrap(), VectorIndex::new(8));

        let mut index = VectorIndex::new(16);
        for (i, text) in ["athlete club", "birth date", "Ünïcödé ✓"].iter().enumerate() {
            index
                .insert(IndexedDocument {
                    key: iri(&format!("k{i}")),
                    kind: [DocumentKind::Class, DocumentKind::Link, DocumentKind::Topic][i],
                    text: text.to_string(),
                    vector: embed_offline(text, 16),
                })
                .unwrap();
        }
        let path = dir.path().join("three.idx");
        save_index(&index, &path).unwrap();
        let back = load_index(&path).unwrap();
        for (a, b) in index.entries().iter().zip(back.entries()) {
            let bits = |v: &EmbeddingVector| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.vector), bits(&b.vector));
        }
        assert_eq!(back, index);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            decode_index(&bytes),
            Err(IndexError::FormatVersionMismatch { .. })
        ));
        let bytes = encode_index(&index, &[]);
        assert!(matches!(
            decode_index(&bytes[..bytes.len() - 3]),
            Err(IndexError::Corrupt(_))
        ));
    }

    #[test]
    fn sections_round_trip() {
        let sections = vec![Section {
            tag: *b"TOPC",
            payload: b"{}".to_vec(),
        }];
        let bytes = encode_index(&VectorIndex::new(4), &sections);
        let (_, back) = decode_index(&bytes).unwrap();
        assert_eq!(back, sections);
    }
}
