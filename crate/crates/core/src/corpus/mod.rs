//! Data model for the benchmark corpus: catalog products, users with their
//! chronologically split behaviors, and task instructions.
//!
//! Everything here is immutable once loaded and validated.

mod fixture;
mod io;
mod split;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::jsonl::JsonlError;

pub use fixture::{generate_fixture, generate_fixture_split, FixtureData};
pub use io::{load_catalog, load_catalog_with, load_instructions, load_users, validate_instructions};
pub use split::{chronological_split, split_sizes, DEFAULT_HISTORY_FRACTION};

/// The five product categories used by default.
pub const DEFAULT_CATEGORIES: [&str; 5] = [
    "Electronics",
    "Home and Kitchen",
    "Grocery and Gourmet Food",
    "Clothing, Shoes, and Jewelry",
    "Health and Household",
];

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("duplicate product id {0}")]
    DuplicateProduct(String),
    #[error("duplicate user id {0}")]
    DuplicateUser(String),
    #[error("duplicate instruction id {0}")]
    DuplicateInstruction(String),
    #[error("product {product_id}: category {category:?} is not in the configured category set")]
    UnknownCategory { product_id: String, category: String },
    #[error("product {product_id}: {message}")]
    InvalidProduct { product_id: String, message: String },
    #[error("user {user_id} references unknown product {product_id}")]
    DanglingProduct { user_id: String, product_id: String },
    #[error("user {user_id}: behaviors out of chronological order ({detail})")]
    Ordering { user_id: String, detail: String },
    #[error("instruction {instruction_id}: {message}")]
    InvalidInstruction { instruction_id: String, message: String },
    #[error("cannot split an empty behavior sequence")]
    EmptyBehaviors,
    #[error("behaviors must be sorted by ascending timestamp (violation at index {0})")]
    Unsorted(usize),
    #[error("fixture needs at least 10 products, got {0}")]
    TooFewProducts(usize),
    #[error("fixture needs at least 1 user")]
    NoUsers,
}

/// Configured set of category labels. Products outside the set are rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySet(BTreeSet<String>);

impl CategorySet {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(labels.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }
}

impl Default for CategorySet {
    fn default() -> Self {
        Self::new(DEFAULT_CATEGORIES)
    }
}

/// Serializes `None` as the string `"unknown"` so a missing value can never be
/// confused with a legitimate zero.
pub(crate) mod unknown_or {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub const MARKER: &str = "unknown";

    pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_f64(*v),
            None => s.serialize_str(MARKER),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Option<f64>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or the string \"{MARKER}\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(Some(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == MARKER {
                    Ok(None)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Product {
    /// Parent ASIN.
    pub product_id: String,
    pub title: String,
    pub category: String,
    #[serde(with = "unknown_or")]
    pub price: Option<f64>,
    pub store: String,
    #[serde(with = "unknown_or")]
    pub average_rating: Option<f64>,
    pub rating_count: u64,
    pub features: Vec<String>,
    pub description: String,
}

impl Product {
    pub(crate) fn validate(&self, categories: &CategorySet) -> Result<(), CorpusError> {
        let bad = |message: String| CorpusError::InvalidProduct {
            product_id: self.product_id.clone(),
            message,
        };
        if self.product_id.is_empty() {
            return Err(bad("empty product id".into()));
        }
        if !categories.contains(&self.category) {
            return Err(CorpusError::UnknownCategory {
                product_id: self.product_id.clone(),
                category: self.category.clone(),
            });
        }
        if let Some(p) = self.price {
            if !p.is_finite() || p < 0.0 {
                return Err(bad(format!("price {p} must be a non-negative number")));
            }
        }
        if let Some(r) = self.average_rating {
            if !(1.0..=5.0).contains(&r) {
                return Err(bad(format!("average rating {r} outside [1, 5]")));
            }
        }
        Ok(())
    }

    pub fn price_label(&self) -> String {
        match self.price {
            Some(p) => format!("{p:.2}"),
            None => unknown_or::MARKER.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorRecord {
    /// Epoch seconds.
    pub timestamp: i64,
    pub product_id: String,
    pub rating: f64,
    pub review_title: String,
    pub review_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriLevel {
    High,
    Medium,
    Low,
}

impl TriLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            TriLevel::High => "high",
            TriLevel::Medium => "medium",
            TriLevel::Low => "low",
        }
    }

    /// Case-insensitive parse of `high`, `medium` or `low`.
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "high" => Some(TriLevel::High),
            "medium" => Some(TriLevel::Medium),
            "low" => Some(TriLevel::Low),
            _ => None,
        }
    }
}

impl fmt::Display for TriLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserProfile {
    pub gender: String,
    pub age: String,
    pub occupation: String,
    pub price_sensitivity: TriLevel,
    pub diversity_preference: TriLevel,
    pub interaction_complexity: TriLevel,
    pub shopping_interest: String,
    pub brand_preference: String,
    pub tone_and_style: String,
    pub item_reference: String,
    pub focus_aspects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    pub user_id: String,
    pub profile: UserProfile,
    pub history: Vec<BehaviorRecord>,
    pub train: Vec<BehaviorRecord>,
    pub test: Vec<BehaviorRecord>,
}

impl UserRecord {
    /// All behaviors in chronological order.
    pub fn behaviors(&self) -> impl Iterator<Item = &BehaviorRecord> {
        self.history.iter().chain(&self.train).chain(&self.test)
    }

    /// Checks that each block is non-decreasing in time and that blocks do
    /// not overlap.
    pub fn validate_order(&self) -> Result<(), CorpusError> {
        let blocks = [("history", &self.history), ("train", &self.train), ("test", &self.test)];
        let mut prev: Option<(&str, i64)> = None;
        for (name, block) in blocks {
            for (i, pair) in block.windows(2).enumerate() {
                if pair[1].timestamp < pair[0].timestamp {
                    return Err(CorpusError::Ordering {
                        user_id: self.user_id.clone(),
                        detail: format!("{name}[{}] precedes {name}[{i}]", i + 1),
                    });
                }
            }
            if let (Some(first), Some((prev_name, prev_max))) = (block.first(), prev) {
                if first.timestamp < prev_max {
                    return Err(CorpusError::Ordering {
                        user_id: self.user_id.clone(),
                        detail: format!("{name} starts before the end of {prev_name}"),
                    });
                }
            }
            if let Some(last) = block.last() {
                prev = Some((name, last.timestamp));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Search,
    Recommendation,
    Review,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Search, TaskKind::Recommendation, TaskKind::Review];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Search => "search",
            TaskKind::Recommendation => "recommendation",
            TaskKind::Review => "review",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    TargetProduct(String),
    ReferenceReview(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instruction {
    pub instruction_id: String,
    pub user_id: String,
    pub task_kind: TaskKind,
    pub text: String,
    pub ground_truth: GroundTruth,
}

impl Instruction {
    pub fn target_product(&self) -> Option<&str> {
        match &self.ground_truth {
            GroundTruth::TargetProduct(id) => Some(id),
            GroundTruth::ReferenceReview(_) => None,
        }
    }

    pub fn reference_review(&self) -> Option<&str> {
        match &self.ground_truth {
            GroundTruth::ReferenceReview(text) => Some(text),
            GroundTruth::TargetProduct(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Catalog, users and the instructions of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub catalog: Vec<Product>,
    pub users: Vec<UserRecord>,
    pub instructions: Vec<Instruction>,
    pub split: Split,
}

pub const CATALOG_FILE: &str = "catalog.jsonl";
pub const USERS_FILE: &str = "users.jsonl";

pub fn instructions_file(split: Split) -> String {
    format!("instructions.{}.jsonl", split.as_str())
}

impl DatasetBundle {
    /// Writes `catalog.jsonl`, `users.jsonl` and `instructions.<split>.jsonl`.
    pub fn save(&self, dir: &std::path::Path) -> Result<(), CorpusError> {
        crate::jsonl::write_records(&dir.join(CATALOG_FILE), &self.catalog)?;
        crate::jsonl::write_records(&dir.join(USERS_FILE), &self.users)?;
        crate::jsonl::write_records(&dir.join(instructions_file(self.split)), &self.instructions)?;
        Ok(())
    }

    pub fn load(dir: &std::path::Path, split: Split) -> Result<Self, CorpusError> {
        let catalog = load_catalog(&dir.join(CATALOG_FILE))?;
        let users = load_users(&dir.join(USERS_FILE), &catalog)?;
        let instructions = load_instructions(&dir.join(instructions_file(split)), &catalog, &users)?;
        Ok(Self {
            catalog,
            users,
            instructions,
            split,
        })
    }

    /// Serialized form used for determinism checks and content hashing.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for part in [
            crate::jsonl::to_lines(&self.catalog),
            crate::jsonl::to_lines(&self.users),
            crate::jsonl::to_lines(&self.instructions),
        ] {
            out.extend_from_slice(part.expect("corpus types always serialize").as_bytes());
        }
        out
    }

    pub fn product_index(&self) -> HashMap<&str, &Product> {
        self.catalog.iter().map(|p| (p.product_id.as_str(), p)).collect()
    }

    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == user_id)
    }
}
