use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::{tokenize, RetrievalError};
use crate::transport::{HttpTransport, TransportConfig};

pub const HASHED_DIM: usize = 256;

/// Dense vector with unit L2 norm, or the zero vector for empty input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Scales to unit norm; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.0.iter_mut().for_each(|x| *x /= n);
        }
        self
    }
}

/// `dot(a, b) / (|a| |b|)`, defined as 0 when either norm is 0.
pub fn cosine_sim(a: &Embedding, b: &Embedding) -> Result<f64, RetrievalError> {
    if a.dim() != b.dim() {
        return Err(RetrievalError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Embedding, RetrievalError>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, RetrievalError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Term-frequency vector with terms hashed (FNV-1a) into a fixed number of
/// buckets. Stateless and deterministic across platforms.
#[derive(Debug, Clone, Copy)]
pub struct HashedEmbedder {
    dim: usize,
}

impl HashedEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn bucket(&self, term: &str) -> usize {
        let mut h = FnvHasher::default();
        h.write(term.as_bytes());
        (h.finish() % self.dim as u64) as usize
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        Self::new(HASHED_DIM)
    }
}

impl EmbeddingProvider for HashedEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, RetrievalError> {
        let mut v = vec![0.0; self.dim];
        for term in tokenize(text) {
            v[self.bucket(&term)] += 1.0;
        }
        Ok(Embedding(v).normalized())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an external embedding service speaking
/// `{"texts": [...]}` -> `{"vectors": [[...]]}`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    transport: HttpTransport,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn new(config: TransportConfig, dim: usize) -> Result<Self, RetrievalError> {
        Ok(Self {
            transport: HttpTransport::new(config)?,
            dim,
        })
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, RetrievalError> {
        let mut v = self.embed_batch(&[text.to_string()])?;
        Ok(v.pop().expect("batch of one"))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, RetrievalError> {
        let resp: EmbedResponse = self.transport.post_json(&EmbedRequest { texts })?;
        if resp.vectors.len() != texts.len() {
            return Err(RetrievalError::VectorCount {
                expected: texts.len(),
                got: resp.vectors.len(),
            });
        }
        resp.vectors
            .into_iter()
            .zip(texts)
            .map(|(v, text)| {
                if v.len() != self.dim {
                    return Err(RetrievalError::DimensionMismatch {
                        left: self.dim,
                        right: v.len(),
                    });
                }
                // Keep the zero-vector rule for empty input regardless of
                // what the service returns.
                if tokenize(text).is_empty() {
                    return Ok(Embedding(vec![0.0; self.dim]));
                }
                Ok(Embedding(v).normalized())
            })
            .collect()
    }
}
