//! Deterministic agents: the ground-truth oracle and a prompt-reading
//! heuristic. Both produce text a real provider could have produced.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use super::episode::{EpisodeRecord, Turn};
use super::metrics::rank_score;
use crate::agent::{ChatMessage, Policy, PolicySource, Role, ScriptBook, Track, AgentError};
use crate::corpus::{GroundTruth, Instruction, TaskKind};
use crate::webenv::{ToolCall, World};

/// Best rank score reachable with a one-item history, and that item.
/// Ties keep the earliest catalog entry.
pub fn best_single_item_history(world: &World, target: &str) -> (f64, Option<String>) {
    let mut best = (0.0, None);
    for p in world.catalog() {
        let Ok(items) = world.get_recommendations_by_history(std::slice::from_ref(&p.product_id)) else {
            continue;
        };
        let ids: Vec<&str> = items.iter().map(|r| r.product.product_id.as_str()).collect();
        let s = rank_score(&ids, target);
        if s > best.0 || best.1.is_none() {
            best = (s, Some(p.product_id.clone()));
        }
    }
    best
}

fn search_score(world: &World, query: &str, target: &str) -> f64 {
    world
        .search_product_by_query(query)
        .map(|items| {
            let ids: Vec<&str> = items.iter().map(|r| r.product.product_id.as_str()).collect();
            rank_score(&ids, target)
        })
        .unwrap_or(0.0)
}

/// The call a perfectly informed agent makes for `instruction`.
///
/// Search tries the target's title, then the title with more of the
/// product text, keeping the first query that ranks it first. Review posts
/// the reference text. Recommendation uses [`best_single_item_history`].
pub fn oracle_call(instruction: &Instruction, world: &World) -> ToolCall {
    match (&instruction.ground_truth, instruction.task_kind) {
        (GroundTruth::ReferenceReview(text), _) => ToolCall::review(text.clone()),
        (GroundTruth::TargetProduct(target), TaskKind::Recommendation) => {
            let (_, item) = best_single_item_history(world, target);
            ToolCall::recommend(item.into_iter().collect::<Vec<_>>())
        }
        (GroundTruth::TargetProduct(target), _) => {
            let Some(p) = world.product(target) else {
                return ToolCall::search(instruction.text.clone());
            };
            let queries = [
                p.title.clone(),
                format!("{} {}", p.title, p.category),
                format!("{} {}", p.title, p.features.join(" ")),
                format!("{} {} {}", p.title, p.features.join(" "), p.description),
            ];
            let mut best = (f64::MIN, queries[0].clone());
            for q in queries {
                let s = search_score(world, &q, target);
                if s > best.0 {
                    best = (s, q);
                }
                if s == 1.0 {
                    break;
                }
            }
            ToolCall::search(best.1)
        }
    }
}

/// Oracle responses per instruction. Multi-turn scripts end with `stop`.
pub fn oracle_script_book<'a>(instructions: impl IntoIterator<Item = &'a Instruction>, world: &World, track: Track) -> ScriptBook {
    let mut book = ScriptBook::default();
    for i in instructions {
        let mut lines = vec![oracle_call(i, world).to_json_text()];
        if track == Track::Multi {
            lines.push(ToolCall::stop().to_json_text());
        }
        book.insert(i.instruction_id.clone(), lines);
    }
    book
}

/// Agent outputs recorded in episodes, replayable as scripts.
pub fn script_book_from_episodes(episodes: &[EpisodeRecord]) -> ScriptBook {
    let mut book = ScriptBook::default();
    for e in episodes {
        let raws: Vec<String> = e
            .transcript
            .iter()
            .filter_map(|t| match t {
                Turn::Agent { raw, .. } => Some(raw.clone()),
                Turn::User { .. } => None,
            })
            .collect();
        book.insert(e.instruction_id.clone(), raws);
    }
    book
}

const MEMORY_START: &str = "Memory:\n\n";
const MEMORY_END: &str = "\n\nFunctions to use:";
const MAX_HISTORY: usize = 10;

fn asin_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"parent_asin: ([^;\n]+)").expect("static pattern"))
}

/// Keyword agent that only reads its prompt.
///
/// Requests mentioning a review get the request text as the review.
/// Requests mentioning recommendations use the product ids found in memory
/// as history, and fall back to search when memory has none. Everything
/// else is searched verbatim. After any tool output it stops.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicPolicy;

impl HeuristicPolicy {
    pub fn decide(messages: &[ChatMessage]) -> ToolCall {
        if messages.iter().any(|m| m.role == Role::Tool) {
            return ToolCall::stop();
        }
        let system = messages.iter().find(|m| m.role == Role::System).map_or("", |m| m.content.as_str());
        let request = messages
            .iter()
            .find(|m| m.role == Role::User)
            .and_then(|m| m.content.split_once("request: "))
            .map_or("", |(_, r)| r)
            .trim();
        let memory = system
            .split_once(MEMORY_START)
            .and_then(|(_, rest)| rest.split_once(MEMORY_END))
            .map_or("", |(m, _)| m);
        let lower = request.to_lowercase();
        if lower.contains("review") {
            return ToolCall::review(request);
        }
        if lower.contains("recommend") {
            let mut seen = BTreeSet::new();
            let mut ids: Vec<String> = asin_re()
                .captures_iter(memory)
                .map(|c| c[1].trim().to_string())
                .filter(|id| seen.insert(id.clone()))
                .take(MAX_HISTORY)
                .collect();
            if !ids.is_empty() {
                // Memory lists the most relevant entry first; the recommender
                // reads the end of the history.
                ids.reverse();
                return ToolCall::recommend(ids);
            }
        }
        ToolCall::search(request)
    }
}

impl Policy for HeuristicPolicy {
    fn complete(&mut self, messages: &[ChatMessage], n: usize) -> Result<Vec<String>, AgentError> {
        let call = Self::decide(messages).to_json_text();
        let react = messages.first().is_some_and(|m| m.content.contains("Action:"));
        let text = if react {
            format!("Thought: pick the tool from the request.\nAction: {call}")
        } else {
            call
        };
        Ok(vec![text; n])
    }
}

impl PolicySource for HeuristicPolicy {
    fn policy_for(&self, _instruction: &Instruction) -> Box<dyn Policy> {
        Box::new(*self)
    }
}
