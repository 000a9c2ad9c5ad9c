//! Episode aggregation and the plain-text results table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::episode::EpisodeRecord;
use super::EvalError;
use crate::corpus::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub episodes: usize,
    pub function_acc: f64,
    pub result_acc: f64,
    /// Mean over the episodes that carry an outcome accuracy.
    pub outcome_acc: Option<f64>,
    pub steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindRow {
    pub task_kind: TaskKind,
    #[serde(flatten)]
    pub metrics: MetricRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Kinds without included episodes are omitted.
    pub per_kind: Vec<KindRow>,
    /// Episode-weighted over every included episode.
    pub overall: MetricRow,
    pub failed: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn row<'a>(episodes: impl Iterator<Item = &'a EpisodeRecord> + Clone) -> MetricRow {
    MetricRow {
        episodes: episodes.clone().count(),
        function_acc: mean(episodes.clone().map(|e| e.function_acc)).unwrap_or(0.0),
        result_acc: mean(episodes.clone().map(|e| e.result_acc)).unwrap_or(0.0),
        outcome_acc: mean(episodes.clone().filter_map(|e| e.outcome_acc)),
        steps: mean(episodes.map(|e| e.steps as f64)).unwrap_or(0.0),
    }
}

/// Arithmetic means per task kind and overall. Failed episodes are left
/// out of every mean and counted in `failed`.
pub fn aggregate(episodes: &[EpisodeRecord]) -> Result<Report, EvalError> {
    if episodes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let included = episodes.iter().filter(|e| !e.is_failed());
    let per_kind = TaskKind::ALL
        .iter()
        .filter_map(|&k| {
            let of_kind = included.clone().filter(move |e| e.task_kind == k);
            (of_kind.clone().next().is_some()).then(|| KindRow {
                task_kind: k,
                metrics: row(of_kind),
            })
        })
        .collect();
    Ok(Report {
        per_kind,
        overall: row(included),
        failed: episodes.iter().filter(|e| e.is_failed()).count(),
    })
}

impl Report {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16}{:>10}{:>10}{:>10}{:>10}{:>10}",
            "task", "episodes", "F.Acc", "R.Acc", "O.Acc", "steps"
        );
        let mut line = |name: &str, m: &MetricRow| {
            let outcome = m.outcome_acc.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                out,
                "{:<16}{:>10}{:>10.4}{:>10.4}{:>10}{:>10.3}",
                name, m.episodes, m.function_acc, m.result_acc, outcome, m.steps
            );
        };
        for r in &self.per_kind {
            line(r.task_kind.as_str(), &r.metrics);
        }
        line("overall", &self.overall);
        if self.failed > 0 {
            let _ = writeln!(out, "failed episodes excluded: {}", self.failed);
        }
        out
    }
}
