//! Text embeddings and per-source product indices.

mod index;
mod lexical;
mod remote;

use serde::{Deserialize, Serialize};

pub use index::{build_index, round_similarity, IndexEntry, IndexError, IndexFileError, ProductIndex, SearchHit, SearchTextError, SIMILARITY_DECIMALS};
pub use lexical::{LexicalEmbedder, LEXICAL_DIM};
pub use remote::{RemoteEmbedder, RemoteEmbedderConfig};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider transport error: {0}")]
    Transport(String),
    #[error("embedding provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("embedding provider reply: {0}")]
    BadReply(String),
    #[error("embedding provider configuration: {0}")]
    Config(String),
}

/// A unit-length vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// L2-normalizes `values`. A zero vector stays zero.
    pub fn normalized(mut values: Vec<f32>) -> Self {
        let norm = values.iter().map(|v| f64::from(*v) * f64::from(*v)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v = (f64::from(*v) / norm) as f32;
            }
        }
        EmbeddingVector(values)
    }

    /// Wraps stored values without renormalizing.
    pub(crate) fn from_raw(values: Vec<f32>) -> Self {
        EmbeddingVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| f64::from(*v) * f64::from(*v)).sum::<f64>().sqrt()
    }

    /// Dot product accumulated in f64, element order. Equals cosine for unit vectors.
    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum()
    }
}

pub trait Embedder: Send + Sync {
    /// Identifies model and configuration; indices only accept queries with a matching one.
    fn fingerprint(&self) -> String;
    fn dim(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text])?;
        out.pop().ok_or_else(|| EmbedError::BadReply("no vector returned".into()))
    }
}
