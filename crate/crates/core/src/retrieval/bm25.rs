//! Okapi BM25 over an in-memory inverted index.
//!
//! `idf = ln(1 + (N - df + 0.5) / (df + 0.5))`, which keeps every term
//! contribution non-negative.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{tokenize, RetrievalError};
use crate::corpus::Product;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexField {
    Title,
    Category,
    Store,
    Features,
    Description,
}

pub const DEFAULT_FIELDS: [IndexField; 5] = [
    IndexField::Title,
    IndexField::Category,
    IndexField::Store,
    IndexField::Features,
    IndexField::Description,
];

impl IndexField {
    fn text(self, p: &Product) -> String {
        match self {
            IndexField::Title => p.title.clone(),
            IndexField::Category => p.category.clone(),
            IndexField::Store => p.store.clone(),
            IndexField::Features => p.features.join(" "),
            IndexField::Description => p.description.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    pub doc_ids: Vec<String>,
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_lengths: Vec<u32>,
    pub avg_doc_length: f64,
    pub doc_count: usize,
    pub params: Bm25Params,
}

impl Bm25Index {
    pub fn build(catalog: &[Product], fields: &[IndexField]) -> Result<Self, RetrievalError> {
        Self::build_with(catalog, fields, Bm25Params::default())
    }

    pub fn build_with(catalog: &[Product], fields: &[IndexField], params: Bm25Params) -> Result<Self, RetrievalError> {
        let docs = catalog.iter().map(|p| {
            let text = fields.iter().map(|f| f.text(p)).collect::<Vec<_>>().join(" ");
            (p.product_id.clone(), text)
        });
        Self::from_documents(docs, params)
    }

    /// Indexes arbitrary `(id, text)` documents in the given order.
    pub fn from_documents<I>(docs: I, params: Bm25Params) -> Result<Self, RetrievalError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut doc_ids = Vec::new();
        let mut doc_lengths = Vec::new();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for (ordinal, (id, text)) in docs.into_iter().enumerate() {
            let terms = tokenize(&text);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &terms {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: ordinal as u32,
                    tf: count,
                });
            }
            doc_ids.push(id);
            doc_lengths.push(terms.len() as u32);
        }
        if doc_ids.is_empty() {
            return Err(RetrievalError::EmptyCatalog);
        }
        let doc_count = doc_ids.len();
        let avg_doc_length = doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_count as f64;
        Ok(Self {
            doc_ids,
            postings,
            doc_lengths,
            avg_doc_length,
            doc_count,
            params,
        })
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, idf: f64, tf: u32, doc: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        // An all-empty corpus has avg length 0; every length ratio is then 1.
        let ratio = if self.avg_doc_length > 0.0 {
            self.doc_lengths[doc] as f64 / self.avg_doc_length
        } else {
            1.0
        };
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * ratio))
    }

    /// Score of one document. Unknown query terms contribute nothing.
    pub fn score(&self, query_terms: &[String], doc: usize) -> f64 {
        assert!(doc < self.doc_count, "doc ordinal {doc} out of range");
        let mut total = 0.0;
        for term in query_terms {
            let Some(list) = self.postings.get(term) else { continue };
            if let Ok(pos) = list.binary_search_by(|p| (p.doc as usize).cmp(&doc)) {
                total += self.term_weight(self.idf(list.len()), list[pos].tf, doc);
            }
        }
        total
    }

    /// Top `k` documents by descending score, ties by ascending id. Returns
    /// `min(k, doc_count)` entries; documents matching no term score 0.
    pub fn query_top_k(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        let terms = tokenize(query);
        let mut scores = vec![0.0f64; self.doc_count];
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(list.len());
            for p in list {
                scores[p.doc as usize] += self.term_weight(idf, p.tf, p.doc as usize);
            }
        }
        let mut order: Vec<usize> = (0..self.doc_count).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.doc_ids[a].cmp(&self.doc_ids[b]))
        });
        order
            .into_iter()
            .take(k)
            .map(|d| (self.doc_ids[d].clone(), scores[d]))
            .collect()
    }
}
