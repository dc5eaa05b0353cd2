use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use super::{EmbedError, Embedder, EmbeddingVector};
use crate::catalog::{DatabaseSource, ProductKey, ProductRecord};

const MAGIC: &[u8; 4] = b"MPIX";
const VERSION: u32 = 1;
const BATCH: usize = 64;

pub const SIMILARITY_DECIMALS: i32 = 6;

pub fn round_similarity(s: f64) -> f64 {
    let scale = 10f64.powi(SIMILARITY_DECIMALS);
    ((s * scale).round() / scale).clamp(-1.0, 1.0)
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("no records to index")]
    Empty,
    #[error("records span several sources; build one index per source")]
    MixedSources,
    #[error("embedding provider failed after {embedded} of {total} names: {source}")]
    Provider { embedded: usize, total: usize, source: EmbedError },
    #[error("query has dimension {query}, index has {index}")]
    DimMismatch { query: usize, index: usize },
    #[error("query fingerprint `{query}` does not match index `{index}`")]
    FingerprintMismatch { query: String, index: String },
}

#[derive(Debug, thiserror::Error)]
pub enum IndexFileError {
    #[error("index file {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("index file {path} is malformed: {reason}")]
    Format { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub key: ProductKey,
    pub name: String,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub key: ProductKey,
    pub name: String,
    pub similarity: f64,
}

/// Exhaustive cosine index over the product names of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductIndex {
    source: DatabaseSource,
    dim: usize,
    fingerprint: String,
    entries: Vec<IndexEntry>,
}

/// One entry per region-collapsed product, ordered by key.
pub fn build_index(records: &[ProductRecord], embedder: &dyn Embedder) -> Result<ProductIndex, IndexError> {
    let source = records.first().ok_or(IndexError::Empty)?.source;
    if records.iter().any(|r| r.source != source) {
        return Err(IndexError::MixedSources);
    }
    let mut names: BTreeMap<ProductKey, &str> = BTreeMap::new();
    for rec in records {
        names.entry(rec.key()).or_insert(rec.name.as_str());
    }
    let items: Vec<(ProductKey, &str)> = names.into_iter().collect();
    let total = items.len();
    let mut entries = Vec::with_capacity(total);
    for chunk in items.chunks(BATCH) {
        let texts: Vec<&str> = chunk.iter().map(|(_, n)| *n).collect();
        let vectors = embedder
            .embed_batch(&texts)
            .map_err(|source| IndexError::Provider { embedded: entries.len(), total, source })?;
        for ((key, name), vector) in chunk.iter().zip(vectors) {
            entries.push(IndexEntry { key: key.clone(), name: name.to_string(), vector });
        }
    }
    Ok(ProductIndex { source, dim: embedder.dim(), fingerprint: embedder.fingerprint(), entries })
}

impl ProductIndex {
    pub fn source(&self) -> DatabaseSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Top `k` by descending cosine, ties by ascending key.
    ///
    /// Similarities are rounded to [`SIMILARITY_DECIMALS`] places before
    /// ranking so that names tied in exact arithmetic stay tied in f32.
    pub fn search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<SearchHit>, IndexError> {
        if query.dim() != self.dim {
            return Err(IndexError::DimMismatch { query: query.dim(), index: self.dim });
        }
        let mut scored: Vec<(f64, &IndexEntry)> =
            self.entries.iter().map(|e| (round_similarity(query.dot(&e.vector)), e)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.key.cmp(&b.1.key)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(s, e)| SearchHit { key: e.key.clone(), name: e.name.clone(), similarity: s })
            .collect())
    }

    /// Embeds `text` with `embedder` (which must match the index) and searches.
    pub fn search_text(&self, text: &str, embedder: &dyn Embedder, k: usize) -> Result<Vec<SearchHit>, SearchTextError> {
        if embedder.fingerprint() != self.fingerprint {
            return Err(IndexError::FingerprintMismatch { query: embedder.fingerprint(), index: self.fingerprint.clone() }.into());
        }
        let vector = embedder.embed(text)?;
        Ok(self.search(&vector, k)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        write_str(&mut out, self.source.slug());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        write_str(&mut out, &self.fingerprint);
        for e in &self.entries {
            for v in e.vector.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for e in &self.entries {
            write_str(&mut out, e.key.as_str());
            write_str(&mut out, &e.name);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        let mut r = bytes;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| "truncated header")?;
        if &magic != MAGIC {
            return Err("bad magic".into());
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let source: DatabaseSource = read_str(&mut r)?.parse().map_err(|e: crate::catalog::UnknownSource| e.to_string())?;
        let dim = read_u32(&mut r)? as usize;
        let count = read_u32(&mut r)? as usize;
        let fingerprint = read_str(&mut r)?;
        let mut vectors = Vec::with_capacity(count);
        for _ in 0..count {
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                let mut b = [0u8; 4];
                r.read_exact(&mut b).map_err(|_| "truncated vectors")?;
                v.push(f32::from_le_bytes(b));
            }
            vectors.push(EmbeddingVector::from_raw(v));
        }
        let mut entries = Vec::with_capacity(count);
        for vector in vectors {
            let key = ProductKey::from(read_str(&mut r)?);
            let name = read_str(&mut r)?;
            entries.push(IndexEntry { key, name, vector });
        }
        if !r.is_empty() {
            return Err("trailing bytes".into());
        }
        Ok(ProductIndex { source, dim, fingerprint, entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexFileError> {
        let io_err = |source| IndexFileError::Io { path: path.display().to_string(), source };
        let mut file = fs::File::create(path).map_err(io_err)?;
        file.write_all(&self.to_bytes()).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, IndexFileError> {
        let bytes = fs::read(path).map_err(|source| IndexFileError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes).map_err(|reason| IndexFileError::Format { path: path.display().to_string(), reason })
    }

    /// Conventional file name inside an index directory.
    pub fn file_name(source: DatabaseSource) -> String {
        format!("{}.mpix", source.slug())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchTextError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn read_u32(r: &mut &[u8]) -> Result<u32, String> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| "truncated integer".to_string())?;
    Ok(u32::from_le_bytes(b))
}

fn read_str(r: &mut &[u8]) -> Result<String, String> {
    let len = read_u32(r)? as usize;
    if r.len() < len {
        return Err("truncated string".into());
    }
    let (head, tail) = r.split_at(len);
    *r = tail;
    String::from_utf8(head.to_vec()).map_err(|_| "string is not UTF-8".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::LexicalEmbedder;

    fn records(names: &[&str]) -> Vec<ProductRecord> {
        names.iter().map(|n| ProductRecord::new(DatabaseSource::BigClimate, n, "NL", Some(0.1))).collect()
    }

    #[test]
    fn single_product_finds_itself() {
        let idx = build_index(&records(&["Red onion"]), &LexicalEmbedder).unwrap();
        assert_eq!(idx.len(), 1);
        let hits = idx.search_text("Red onion", &LexicalEmbedder, 3).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0].similarity - 1.0).abs() < 1e-6);
    }

    #[test]
    fn regions_collapse() {
        let mut recs = records(&["Red onion", "Olives"]);
        recs.push(ProductRecord::new(DatabaseSource::BigClimate, "Red onion", "DK", Some(0.2)));
        assert_eq!(build_index(&recs, &LexicalEmbedder).unwrap().len(), 2);
    }

    #[test]
    fn k_zero_and_dim_mismatch() {
        let idx = build_index(&records(&["Red onion", "Olives"]), &LexicalEmbedder).unwrap();
        assert!(idx.search_text("onion", &LexicalEmbedder, 0).unwrap().is_empty());
        let err = idx.search(&EmbeddingVector::normalized(vec![1.0; 3]), 3).unwrap_err();
        assert!(matches!(err, IndexError::DimMismatch { query: 3, index: 256 }));
    }

    #[test]
    fn ties_break_by_key() {
        let v = EmbeddingVector::normalized(vec![1.0, 0.0]);
        let entry = |k: &str| IndexEntry { key: k.into(), name: k.into(), vector: v.clone() };
        let idx = ProductIndex {
            source: DatabaseSource::Bonsai,
            dim: 2,
            fingerprint: "t".into(),
            entries: vec![entry("bonsai:c"), entry("bonsai:a"), entry("bonsai:b")],
        };
        let keys: Vec<String> = idx.search(&v, 3).unwrap().into_iter().map(|h| h.key.to_string()).collect();
        assert_eq!(keys, ["bonsai:a", "bonsai:b", "bonsai:c"]);
    }

    #[test]
    fn byte_round_trip() {
        let idx = build_index(&records(&["Red onion", "Olives", "Pizza dough"]), &LexicalEmbedder).unwrap();
        let bytes = idx.to_bytes();
        let back = ProductIndex::from_bytes(&bytes).unwrap();
        assert_eq!(back, idx);
        assert!(ProductIndex::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn mixed_sources_rejected() {
        let mut recs = records(&["Red onion"]);
        recs.push(ProductRecord::new(DatabaseSource::Agribalyse, "Onion, raw", "FR", Some(0.1)));
        assert!(matches!(build_index(&recs, &LexicalEmbedder), Err(IndexError::MixedSources)));
        assert!(matches!(build_index(&[], &LexicalEmbedder), Err(IndexError::Empty)));
    }

    struct Failing;

    impl Embedder for Failing {
        fn fingerprint(&self) -> String {
            "failing".into()
        }
        fn dim(&self) -> usize {
            2
        }
        fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            if texts.iter().any(|t| t.starts_with("p")) {
                Err(EmbedError::Transport("down".into()))
            } else {
                Ok(texts.iter().map(|_| EmbeddingVector::normalized(vec![1.0, 0.0])).collect())
            }
        }
    }

    #[test]
    fn provider_failure_reports_progress() {
        let names: Vec<String> = (0..70).map(|i| format!("a{i:03}")).chain((0..5).map(|i| format!("p{i}"))).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let err = build_index(&records(&refs), &Failing).unwrap_err();
        assert!(matches!(err, IndexError::Provider { embedded: 64, total: 75, .. }), "{err}");
    }
}
