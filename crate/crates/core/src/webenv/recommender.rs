//! Sequential recommenders behind the `get_recommendations_by_history`
//! function.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{BehaviorRecord, Product, UserRecord};
use crate::jsonl::{read_records, JsonlError};

pub trait Recommender: Send + Sync {
    /// Ranked `(product_id, score)` for a non-empty history of known ids.
    /// Never returns an id present in `history`.
    fn recommend(&self, history: &[String], k: usize) -> Vec<(String, f64)>;
}

/// First-order co-occurrence model: counts of `a -> b` for adjacent pairs in
/// training sequences, with item popularity as the fallback signal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoocModel {
    pub transitions: BTreeMap<String, BTreeMap<String, u64>>,
    pub popularity: BTreeMap<String, u64>,
    /// Items seen in training; everything else is cold-start and never
    /// recommended.
    pub eligible: BTreeSet<String>,
}

impl CoocModel {
    pub fn transition(&self, from: &str, to: &str) -> u64 {
        self.transitions.get(from).and_then(|m| m.get(to)).copied().unwrap_or(0)
    }

    pub fn popularity(&self, id: &str) -> u64 {
        self.popularity.get(id).copied().unwrap_or(0)
    }
}

/// Per-user sequences the environment's recommender is trained on: the
/// history and train blocks, which both precede every test interaction.
pub fn training_sequences(users: &[UserRecord]) -> Vec<Vec<BehaviorRecord>> {
    users
        .iter()
        .map(|u| u.history.iter().chain(&u.train).cloned().collect())
        .collect()
}

pub fn train_cooc<S: AsRef<[BehaviorRecord]>>(sequences: impl IntoIterator<Item = S>, catalog: &[Product]) -> CoocModel {
    let known: HashSet<&str> = catalog.iter().map(|p| p.product_id.as_str()).collect();
    let mut model = CoocModel::default();
    for seq in sequences {
        let ids: Vec<&str> = seq
            .as_ref()
            .iter()
            .map(|b| b.product_id.as_str())
            .filter(|id| known.contains(id))
            .collect();
        for id in &ids {
            *model.popularity.entry(id.to_string()).or_default() += 1;
            model.eligible.insert(id.to_string());
        }
        for pair in ids.windows(2) {
            *model
                .transitions
                .entry(pair[0].to_string())
                .or_default()
                .entry(pair[1].to_string())
                .or_default() += 1;
        }
    }
    model
}

impl Recommender for CoocModel {
    fn recommend(&self, history: &[String], k: usize) -> Vec<(String, f64)> {
        let Some(last) = history.last() else { return Vec::new() };
        let seen: HashSet<&str> = history.iter().map(String::as_str).collect();
        let mut scored: Vec<(&str, u64, u64)> = self
            .eligible
            .iter()
            .filter(|id| !seen.contains(id.as_str()))
            .map(|id| (id.as_str(), self.transition(last, id), self.popularity(id)))
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then_with(|| a.0.cmp(b.0)));
        scored
            .into_iter()
            .take(k)
            .map(|(id, t, _)| (id.to_string(), t as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ScoreRow {
    /// `None` marks the fallback row used for anchors without their own row.
    anchor: Option<String>,
    scores: BTreeMap<String, f64>,
}

/// Scores loaded from a file, for plugging in an externally trained model.
///
/// Each line is `{"anchor": "<id>" | null, "scores": {"<id>": score, ...}}`;
/// the last known history id selects the row.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedRecommender {
    rows: BTreeMap<String, BTreeMap<String, f64>>,
    fallback: BTreeMap<String, f64>,
}

impl PrecomputedRecommender {
    pub fn load(path: &Path) -> Result<Self, JsonlError> {
        let rows: Vec<ScoreRow> = read_records(path)?;
        let mut out = Self::default();
        for row in rows {
            match row.anchor {
                Some(a) => {
                    out.rows.insert(a, row.scores);
                }
                None => out.fallback = row.scores,
            }
        }
        Ok(out)
    }
}

impl Recommender for PrecomputedRecommender {
    fn recommend(&self, history: &[String], k: usize) -> Vec<(String, f64)> {
        let Some(last) = history.last() else { return Vec::new() };
        let row = self.rows.get(last).unwrap_or(&self.fallback);
        let seen: HashSet<&str> = history.iter().map(String::as_str).collect();
        let mut scored: Vec<(&String, f64)> = row
            .iter()
            .filter(|(id, _)| !seen.contains(id.as_str()))
            .map(|(id, s)| (id, *s))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(b.0)));
        scored.into_iter().take(k).map(|(id, s)| (id.clone(), s)).collect()
    }
}
