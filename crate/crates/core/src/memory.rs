//! Per-user long-term memory and task-specific retrieval.
//!
//! A bank holds one entry per history behavior (purchase joined with the
//! user's review). Task-specific retrieval ranks entries by cosine similarity
//! to the instruction, keeps the top `k`, projects each onto the fields the
//! identified function needs and then trims whole entries from the tail until
//! the rendered memory fits the token budget.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Product, UserRecord};
use crate::retrieval::{cosine_sim, Embedding, EmbeddingProvider, RetrievalError};
use crate::webenv::FunctionKind;

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("user {user_id}: history references unknown product {product_id}")]
    DanglingProduct { user_id: String, product_id: String },
    #[error(transparent)]
    Embedding(#[from] RetrievalError),
    #[error("no memory bank for user {0}")]
    UnknownUser(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub product: Product,
    pub rating: f64,
    pub review_title: String,
    pub review_text: String,
    pub timestamp: i64,
}

impl MemoryEntry {
    pub fn features(&self) -> FeatureRecord {
        let p = &self.product;
        FeatureRecord(vec![
            (FeatureField::Title, p.title.clone()),
            (FeatureField::Category, p.category.clone()),
            (FeatureField::Price, p.price_label()),
            (FeatureField::Store, p.store.clone()),
            (FeatureField::ParentAsin, p.product_id.clone()),
            (FeatureField::Rating, format!("{}", self.rating)),
            (FeatureField::ReviewTitle, self.review_title.clone()),
            (FeatureField::ReviewText, self.review_text.clone()),
        ])
    }

    /// Full text of the entry; this is what gets embedded.
    pub fn serialized(&self) -> String {
        self.features().render()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureField {
    Title,
    Category,
    Price,
    Store,
    ParentAsin,
    Rating,
    ReviewTitle,
    ReviewText,
}

impl FeatureField {
    pub fn label(self) -> &'static str {
        match self {
            FeatureField::Title => "title",
            FeatureField::Category => "category",
            FeatureField::Price => "price",
            FeatureField::Store => "store",
            FeatureField::ParentAsin => "parent_asin",
            FeatureField::Rating => "rating",
            FeatureField::ReviewTitle => "review_title",
            FeatureField::ReviewText => "review",
        }
    }

    /// Fields kept for each function. Non-task functions keep everything.
    pub fn for_function(kind: FunctionKind) -> &'static [FeatureField] {
        use FeatureField::*;
        match kind {
            FunctionKind::SearchProductByQuery => &[Title, Category, Price, Store],
            FunctionKind::GetRecommendationsByHistory => &[Title, Category, ParentAsin],
            FunctionKind::AddProductReview => &[Rating, ReviewText],
            FunctionKind::Respond | FunctionKind::Stop => {
                &[Title, Category, Price, Store, ParentAsin, Rating, ReviewTitle, ReviewText]
            }
        }
    }
}

/// Ordered `(field, value)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRecord(pub Vec<(FeatureField, String)>);

impl FeatureRecord {
    pub fn get(&self, field: FeatureField) -> Option<&str> {
        self.0.iter().find(|(f, _)| *f == field).map(|(_, v)| v.as_str())
    }

    pub fn fields(&self) -> Vec<FeatureField> {
        self.0.iter().map(|(f, _)| *f).collect()
    }

    /// One line, `label: value` pairs separated by `; `.
    pub fn render(&self) -> String {
        self.0
            .iter()
            .map(|(f, v)| format!("{}: {}", f.label(), v))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Projection of a record onto the fields `kind` needs.
pub fn extract_features(record: &FeatureRecord, kind: FunctionKind) -> FeatureRecord {
    let keep = FeatureField::for_function(kind);
    FeatureRecord(record.0.iter().filter(|(f, _)| keep.contains(f)).cloned().collect())
}

/// Whitespace-delimited piece count.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    pub user_id: String,
    pub entries: Vec<MemoryEntry>,
    pub embeddings: Vec<Embedding>,
}

impl MemoryBank {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry indices by descending similarity to `query`; ties go to the
    /// newer entry.
    fn ranked_by_similarity(&self, query: &Embedding) -> Result<Vec<(usize, f64)>, MemoryError> {
        let mut scored = self
            .embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| Ok((i, cosine_sim(query, e)?)))
            .collect::<Result<Vec<_>, RetrievalError>>()?;
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(self.entries[b.0].timestamp.cmp(&self.entries[a.0].timestamp))
                .then(b.0.cmp(&a.0))
        });
        Ok(scored)
    }
}

/// One bank entry per history behavior, joined with its product.
pub fn build_memory_bank(
    user: &UserRecord,
    catalog: &[Product],
    embedder: &dyn EmbeddingProvider,
) -> Result<MemoryBank, MemoryError> {
    let by_id: HashMap<&str, &Product> = catalog.iter().map(|p| (p.product_id.as_str(), p)).collect();
    let entries = user
        .history
        .iter()
        .map(|b| {
            let product = by_id.get(b.product_id.as_str()).ok_or_else(|| MemoryError::DanglingProduct {
                user_id: user.user_id.clone(),
                product_id: b.product_id.clone(),
            })?;
            Ok(MemoryEntry {
                product: (*product).clone(),
                rating: b.rating,
                review_title: b.review_title.clone(),
                review_text: b.review_text.clone(),
                timestamp: b.timestamp,
            })
        })
        .collect::<Result<Vec<_>, MemoryError>>()?;
    let texts: Vec<String> = entries.iter().map(MemoryEntry::serialized).collect();
    let embeddings = embedder.embed_batch(&texts)?;
    Ok(MemoryBank {
        user_id: user.user_id.clone(),
        entries,
        embeddings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub k: usize,
    pub token_budget: usize,
}

impl RetrievalConfig {
    pub const BUDGETS: [usize; 3] = [256, 512, 768];

    pub fn single_turn() -> Self {
        Self { k: 50, token_budget: 768 }
    }

    pub fn multi_turn() -> Self {
        Self { k: 20, token_budget: 768 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryItem {
    pub features: FeatureRecord,
    pub similarity: f64,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMemory {
    pub kind: FunctionKind,
    pub token_budget: usize,
    /// Descending similarity.
    pub items: Vec<MemoryItem>,
}

impl TaskMemory {
    pub fn render(&self) -> String {
        render_lines(self.items.iter().map(|i| i.features.render()))
    }

    pub fn token_count(&self) -> usize {
        count_tokens(&self.render())
    }
}

fn render_lines(lines: impl Iterator<Item = String>) -> String {
    lines.collect::<Vec<_>>().join("\n")
}

pub fn retrieve_task_memory(
    bank: &MemoryBank,
    instruction: &str,
    kind: FunctionKind,
    config: RetrievalConfig,
    embedder: &dyn EmbeddingProvider,
) -> Result<TaskMemory, MemoryError> {
    let query = embedder.embed(instruction)?;
    let mut items = Vec::new();
    let mut used = 0;
    for (i, similarity) in bank.ranked_by_similarity(&query)?.into_iter().take(config.k.max(1)) {
        let entry = &bank.entries[i];
        let features = extract_features(&entry.features(), kind);
        let cost = count_tokens(&features.render());
        // Keep the longest prefix that fits; lower-similarity entries go first.
        if used + cost > config.token_budget {
            break;
        }
        used += cost;
        items.push(MemoryItem {
            features,
            similarity,
            timestamp: entry.timestamp,
        });
    }
    Ok(TaskMemory {
        kind,
        token_budget: config.token_budget,
        items,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryStrategy {
    None,
    Random,
    Last,
    Relevant,
    /// Top-k by similarity, function-specific fields, token budget.
    #[serde(rename = "puma")]
    TaskSpecific,
}

impl MemoryStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Self::None),
            "random" => Some(Self::Random),
            "last" => Some(Self::Last),
            "relevant" => Some(Self::Relevant),
            "puma" => Some(Self::TaskSpecific),
            _ => None,
        }
    }
}

/// Entry selection for the baseline strategies (`n > len` returns all).
///
/// * `Random`: `n` entries without replacement under `seed`, newest first.
/// * `Last`: the `n` newest, newest first.
/// * `Relevant`: top `n` by similarity to `instruction`.
/// * `TaskSpecific` is not a baseline and selects like `Relevant`.
pub fn select_baseline_memory<'a>(
    bank: &'a MemoryBank,
    strategy: MemoryStrategy,
    n: usize,
    seed: u64,
    instruction: &str,
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<&'a MemoryEntry>, MemoryError> {
    let n = n.min(bank.len());
    let newest_first = |mut idx: Vec<usize>| -> Vec<&'a MemoryEntry> {
        idx.sort_by(|&a, &b| bank.entries[b].timestamp.cmp(&bank.entries[a].timestamp).then(b.cmp(&a)));
        idx.into_iter().map(|i| &bank.entries[i]).collect()
    };
    Ok(match strategy {
        MemoryStrategy::None => Vec::new(),
        MemoryStrategy::Last => {
            let mut all = newest_first((0..bank.len()).collect());
            all.truncate(n);
            all
        }
        MemoryStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            newest_first(rand::seq::index::sample(&mut rng, bank.len(), n).into_vec())
        }
        MemoryStrategy::Relevant | MemoryStrategy::TaskSpecific => {
            let query = embedder.embed(instruction)?;
            bank.ranked_by_similarity(&query)?
                .into_iter()
                .take(n)
                .map(|(i, _)| &bank.entries[i])
                .collect()
        }
    })
}

/// Builds the memory block for prompts from prebuilt banks.
#[derive(Clone)]
pub struct MemoryPlanner {
    banks: Arc<HashMap<String, MemoryBank>>,
    embedder: Arc<dyn EmbeddingProvider>,
    pub strategy: MemoryStrategy,
    pub retrieval: RetrievalConfig,
    /// Entry count for the baseline strategies.
    pub baseline_len: usize,
}

impl MemoryPlanner {
    pub fn new(
        users: &[UserRecord],
        catalog: &[Product],
        embedder: Arc<dyn EmbeddingProvider>,
        strategy: MemoryStrategy,
        retrieval: RetrievalConfig,
        baseline_len: usize,
    ) -> Result<Self, MemoryError> {
        let banks = users
            .iter()
            .map(|u| Ok((u.user_id.clone(), build_memory_bank(u, catalog, embedder.as_ref())?)))
            .collect::<Result<HashMap<_, _>, MemoryError>>()?;
        Ok(Self {
            banks: Arc::new(banks),
            embedder,
            strategy,
            retrieval,
            baseline_len,
        })
    }

    pub fn bank(&self, user_id: &str) -> Result<&MemoryBank, MemoryError> {
        self.banks.get(user_id).ok_or_else(|| MemoryError::UnknownUser(user_id.to_string()))
    }

    pub fn embedder(&self) -> &dyn EmbeddingProvider {
        self.embedder.as_ref()
    }

    pub fn task_memory(&self, user_id: &str, instruction: &str, kind: FunctionKind) -> Result<TaskMemory, MemoryError> {
        retrieve_task_memory(self.bank(user_id)?, instruction, kind, self.retrieval, self.embedder.as_ref())
    }

    /// Memory text for the prompt; empty when the strategy selects nothing.
    /// `kind` is the identified function, used only by the task-specific
    /// strategy.
    pub fn memory_text(&self, user_id: &str, instruction: &str, kind: FunctionKind, seed: u64) -> Result<String, MemoryError> {
        if self.strategy == MemoryStrategy::TaskSpecific {
            return Ok(self.task_memory(user_id, instruction, kind)?.render());
        }
        let bank = self.bank(user_id)?;
        let entries = select_baseline_memory(bank, self.strategy, self.baseline_len, seed, instruction, self.embedder.as_ref())?;
        Ok(render_lines(entries.into_iter().map(MemoryEntry::serialized)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_fixture, BehaviorRecord};
    use crate::retrieval::HashedEmbedder;
    use proptest::prelude::*;

    fn fixture_bank() -> (MemoryBank, HashedEmbedder) {
        let bundle = generate_fixture(7, 3, 30).unwrap();
        let e = HashedEmbedder::default();
        (build_memory_bank(&bundle.users[0], &bundle.catalog, &e).unwrap(), e)
    }

    #[test]
    fn one_entry_per_history_behavior() {
        let bundle = generate_fixture(7, 3, 30).unwrap();
        let e = HashedEmbedder::default();
        let user = &bundle.users[0];
        let bank = build_memory_bank(user, &bundle.catalog, &e).unwrap();
        assert_eq!(bank.len(), user.history.len());
        assert_eq!(bank.embeddings.len(), bank.len());
        assert_eq!(bank, build_memory_bank(user, &bundle.catalog, &e).unwrap());
    }

    #[test]
    fn empty_history_gives_empty_bank() {
        let bundle = generate_fixture(7, 1, 30).unwrap();
        let mut user = bundle.users[0].clone();
        user.history.clear();
        let bank = build_memory_bank(&user, &bundle.catalog, &HashedEmbedder::default()).unwrap();
        assert!(bank.is_empty());
        let tm = retrieve_task_memory(&bank, "anything", FunctionKind::SearchProductByQuery, RetrievalConfig::single_turn(), &HashedEmbedder::default()).unwrap();
        assert!(tm.items.is_empty());
    }

    #[test]
    fn dangling_history_is_error() {
        let bundle = generate_fixture(7, 1, 30).unwrap();
        let mut user = bundle.users[0].clone();
        user.history.push(BehaviorRecord {
            product_id: "missing".into(),
            ..user.history[0].clone()
        });
        assert!(matches!(
            build_memory_bank(&user, &bundle.catalog, &HashedEmbedder::default()),
            Err(MemoryError::DanglingProduct { .. })
        ));
    }

    #[test]
    fn exact_text_match_ranks_first() {
        let (bank, e) = fixture_bank();
        let target = &bank.entries[3];
        let cfg = RetrievalConfig { k: 100, token_budget: 100_000 };
        let tm = retrieve_task_memory(&bank, &target.serialized(), FunctionKind::Respond, cfg, &e).unwrap();
        assert_eq!(tm.items.len(), bank.len());
        assert_eq!(tm.items[0].features, target.features());
        assert!((tm.items[0].similarity - 1.0).abs() < 1e-12);
        assert!(tm.items.windows(2).all(|w| w[0].similarity >= w[1].similarity));
    }

    #[test]
    fn per_kind_fields() {
        let (bank, _) = fixture_bank();
        let full = bank.entries[0].features();
        use FeatureField::*;
        assert_eq!(
            extract_features(&full, FunctionKind::GetRecommendationsByHistory).fields(),
            [Title, Category, ParentAsin]
        );
        assert_eq!(extract_features(&full, FunctionKind::AddProductReview).fields(), [Rating, ReviewText]);
        let search = extract_features(&full, FunctionKind::SearchProductByQuery);
        assert!(search.get(Price).is_some());
        assert!(search.get(Rating).is_none());
    }

    #[test]
    fn budget_keeps_whole_entries() {
        let (bank, e) = fixture_bank();
        let cfg = RetrievalConfig { k: 50, token_budget: 40 };
        let tm = retrieve_task_memory(&bank, "kettle", FunctionKind::SearchProductByQuery, cfg, &e).unwrap();
        assert!(tm.token_count() <= 40);
        for item in &tm.items {
            assert_eq!(item.features.fields().len(), 4);
        }
    }

    #[test]
    fn baseline_strategies() {
        let (bank, e) = fixture_bank();
        assert!(select_baseline_memory(&bank, MemoryStrategy::None, 5, 0, "", &e).unwrap().is_empty());
        let last = select_baseline_memory(&bank, MemoryStrategy::Last, 2, 0, "", &e).unwrap();
        let mut by_time: Vec<_> = bank.entries.iter().collect();
        by_time.sort_by_key(|x| std::cmp::Reverse(x.timestamp));
        assert_eq!(last, by_time[..2].to_vec());
        let r1 = select_baseline_memory(&bank, MemoryStrategy::Random, 3, 42, "", &e).unwrap();
        let r2 = select_baseline_memory(&bank, MemoryStrategy::Random, 3, 42, "", &e).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.len(), 3);
        let all = select_baseline_memory(&bank, MemoryStrategy::Last, 1000, 0, "", &e).unwrap();
        assert_eq!(all.len(), bank.len());
    }

    proptest! {
        #[test]
        fn extraction_is_a_projection(kind_idx in 0usize..5) {
            let (bank, _) = fixture_bank();
            let kind = FunctionKind::ALL[kind_idx];
            let once = extract_features(&bank.entries[0].features(), kind);
            prop_assert_eq!(extract_features(&once, kind), once);
        }
    }
}
