//! Scoring functions for episodes and ranked lists.

use std::collections::BTreeSet;

use super::EvalError;
use crate::corpus::{GroundTruth, TaskKind};
use crate::retrieval::{cosine_sim, EmbeddingProvider};
use crate::webenv::{FunctionKind, ToolCall, RESULT_LIST_LEN};

/// What a task-tool call produced, in gradable form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<'a> {
    Ranked(&'a [String]),
    Review(&'a str),
}

/// 1 when the call uses the task's tool and the environment accepted its
/// parameters.
pub fn function_accuracy(call: Option<&ToolCall>, accepted: bool, kind: TaskKind) -> f64 {
    let right_tool = call.and_then(ToolCall::kind) == Some(FunctionKind::for_task(kind));
    if right_tool && accepted {
        1.0
    } else {
        0.0
    }
}

/// `(11 - r) / 10` for the first occurrence at rank `r <= 10`, else 0.
pub fn rank_score<S: AsRef<str>>(ranked: &[S], target: &str) -> f64 {
    match ranked.iter().take(RESULT_LIST_LEN).position(|id| id.as_ref() == target) {
        Some(i) => (RESULT_LIST_LEN - i) as f64 / 10.0,
        None => 0.0,
    }
}

/// Clamped cosine similarity of the two texts' embeddings. Identical texts
/// score exactly 1 and a zero embedding scores 0.
pub fn review_similarity(posted: &str, reference: &str, embedder: &dyn EmbeddingProvider) -> Result<f64, EvalError> {
    if posted == reference && !posted.trim().is_empty() {
        return Ok(1.0);
    }
    let a = embedder.embed(posted)?;
    let b = embedder.embed(reference)?;
    Ok(cosine_sim(&a, &b)?.clamp(0.0, 1.0))
}

/// Scores the graded call's outcome against the ground truth. A missing
/// outcome or one of the wrong shape scores 0.
pub fn result_accuracy(
    kind: TaskKind,
    outcome: Option<Outcome<'_>>,
    truth: &GroundTruth,
    embedder: &dyn EmbeddingProvider,
) -> Result<f64, EvalError> {
    match (kind, outcome, truth) {
        (TaskKind::Search | TaskKind::Recommendation, Some(Outcome::Ranked(ids)), GroundTruth::TargetProduct(t)) => {
            Ok(rank_score(ids, t))
        }
        (TaskKind::Review, Some(Outcome::Review(text)), GroundTruth::ReferenceReview(r)) => {
            review_similarity(text, r, embedder)
        }
        _ => Ok(0.0),
    }
}

/// Best rank score over every list returned during an episode.
pub fn outcome_accuracy<'a>(lists: impl IntoIterator<Item = &'a [String]>, target: &str) -> f64 {
    lists.into_iter().map(|l| rank_score(l, target)).fold(0.0, f64::max)
}

/// Binary-gain NDCG over the top `k`.
pub fn ndcg_at_k<S: AsRef<str>>(ranked: &[S], positives: &BTreeSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    if positives.is_empty() {
        return 0.0;
    }
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| positives.contains(id.as_ref()))
        .map(|(i, _)| discount(i))
        .sum();
    let ideal: f64 = (0..positives.len().min(k)).map(discount).sum();
    dcg / ideal
}

pub fn recall_at_k<S: AsRef<str>>(ranked: &[S], positives: &BTreeSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    if positives.is_empty() {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(k)
        .map(AsRef::as_ref)
        .collect::<BTreeSet<&str>>()
        .into_iter()
        .filter(|id| positives.contains(*id))
        .count();
    hits as f64 / positives.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::HashedEmbedder;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("p{i}")).collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rank_scores_are_exact_tenths() {
        let list = ids(12);
        let expected = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0, 0.0];
        for (r, want) in expected.iter().enumerate() {
            assert_eq!(rank_score(&list, &format!("p{}", r + 1)), *want);
        }
    }

    #[test]
    fn first_occurrence_counts() {
        let list = vec!["a".to_string(), "b".into(), "a".into()];
        assert_eq!(rank_score(&list, "a"), 1.0);
    }

    #[test]
    fn function_accuracy_cases() {
        let search = ToolCall::search("x");
        assert_eq!(function_accuracy(Some(&search), true, TaskKind::Search), 1.0);
        assert_eq!(function_accuracy(Some(&search), true, TaskKind::Recommendation), 0.0);
        assert_eq!(function_accuracy(Some(&ToolCall::review("")), false, TaskKind::Review), 0.0);
        assert_eq!(function_accuracy(Some(&ToolCall::stop()), true, TaskKind::Search), 0.0);
        assert_eq!(function_accuracy(None, false, TaskKind::Search), 0.0);
    }

    #[test]
    fn review_identity_and_clamp() {
        let e = HashedEmbedder::default();
        let truth = GroundTruth::ReferenceReview("great kettle, boils fast".into());
        let r = result_accuracy(TaskKind::Review, Some(Outcome::Review("great kettle, boils fast")), &truth, &e).unwrap();
        assert_eq!(r, 1.0);
        let other = result_accuracy(TaskKind::Review, Some(Outcome::Review("zzz")), &truth, &e).unwrap();
        assert!((0.0..=1.0).contains(&other));
        assert_eq!(result_accuracy(TaskKind::Review, None, &truth, &e).unwrap(), 0.0);
    }

    #[test]
    fn outcome_takes_best_list() {
        let a: Vec<String> = ["x", "y", "t"].iter().map(|s| s.to_string()).collect();
        let mut b = ids(6);
        b.push("t".into());
        assert_eq!(outcome_accuracy([a.as_slice(), b.as_slice()], "t"), 0.8);
        assert_eq!(outcome_accuracy(std::iter::empty::<&[String]>(), "t"), 0.0);
    }

    #[test]
    fn ndcg_hand_values() {
        let list = ids(5);
        assert_eq!(ndcg_at_k(&list, &set(&["p1", "p2"]), 5), 1.0);
        let expected = (1.0 / 5f64.log2() + 1.0 / 6f64.log2()) / (1.0 + 1.0 / 3f64.log2());
        let got = ndcg_at_k(&list, &set(&["p4", "p5"]), 5);
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.5013).abs() < 5e-5);
        assert_eq!(ndcg_at_k(&list, &set(&["q"]), 5), 0.0);
        assert_eq!(ndcg_at_k(&list, &set(&[]), 5), 0.0);
    }

    #[test]
    fn recall_hand_values() {
        let list = ids(10);
        assert!((recall_at_k(&list, &set(&["p1", "p3", "p9"]), 5) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(recall_at_k(&list, &set(&["p1", "p2"]), 5), 1.0);
        assert_eq!(recall_at_k(&list, &set(&["p8"]), 5), 0.0);
    }
}
