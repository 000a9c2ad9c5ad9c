//! Lexical ranking (BM25) over the catalog and the embedding provider used
//! for memory retrieval and review scoring.

mod bm25;
mod embed;
mod tokenize;

pub use bm25::{Bm25Index, Bm25Params, IndexField, Posting, DEFAULT_FIELDS};
pub use embed::{cosine_sim, Embedding, EmbeddingProvider, HashedEmbedder, RemoteEmbedder, HASHED_DIM};
pub use tokenize::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("cannot index an empty catalog")]
    EmptyCatalog,
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding service: {0}")]
    Transport(#[from] crate::transport::TransportError),
    #[error("embedding service returned {got} vectors for {expected} texts")]
    VectorCount { expected: usize, got: usize },
}
