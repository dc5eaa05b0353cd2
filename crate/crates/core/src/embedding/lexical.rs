//! Hashed character-trigram embedder. Deterministic and offline.

use super::{EmbedError, Embedder, EmbeddingVector};

pub const LEXICAL_DIM: usize = 256;

const FNV_OFFSET: u32 = 0x811c_9dc5;
const FNV_PRIME: u32 = 0x0100_0193;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LexicalEmbedder;

fn fnv1a(bytes: &[u8]) -> u32 {
    bytes.iter().fold(FNV_OFFSET, |h, b| (h ^ u32::from(*b)).wrapping_mul(FNV_PRIME))
}

impl LexicalEmbedder {
    /// Trigram counts of `" text "` lowercased, before normalization.
    pub fn counts(text: &str) -> Vec<f32> {
        let padded: Vec<char> = format!(" {} ", text.trim().to_lowercase()).chars().collect();
        let mut bag = vec![0.0f32; LEXICAL_DIM];
        let mut buf = [0u8; 12];
        for w in padded.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            bag[fnv1a(&buf[..len]) as usize % LEXICAL_DIM] += 1.0;
        }
        bag
    }
}

impl Embedder for LexicalEmbedder {
    fn fingerprint(&self) -> String {
        format!("lexical-trigram-fnv1a-{LEXICAL_DIM}-v1")
    }

    fn dim(&self) -> usize {
        LEXICAL_DIM
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts
            .iter()
            .map(|t| {
                if t.trim().is_empty() {
                    Err(EmbedError::EmptyText)
                } else {
                    Ok(EmbeddingVector::normalized(Self::counts(t)))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embed(s: &str) -> EmbeddingVector {
        LexicalEmbedder.embed(s).unwrap()
    }

    #[test]
    fn unit_norm_and_deterministic() {
        let v = embed("red onion");
        assert!((v.norm() - 1.0).abs() < 1e-6);
        assert_eq!(v, embed("red onion"));
        assert_eq!(v, embed("  Red Onion "));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0x811c9dc5);
        assert_eq!(fnv1a(b"a"), 0xe40c292c);
        assert_eq!(fnv1a(b"foobar"), 0xbf9cf968);
    }

    #[test]
    fn trigram_count() {
        // " ab " has windows " ab" and "ab ".
        assert_eq!(LexicalEmbedder::counts("ab").iter().sum::<f32>(), 2.0);
    }

    #[test]
    fn related_names_are_closer() {
        let q = embed("red onion");
        assert!(q.dot(&embed("red onion, raw")) > q.dot(&embed("olive oil")));
    }

    #[test]
    fn empty_text_rejected() {
        assert!(matches!(LexicalEmbedder.embed(" "), Err(EmbedError::EmptyText)));
    }
}
