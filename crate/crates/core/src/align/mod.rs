//! Alignment data: SFT examples with heuristic labels, scored candidate
//! parameters, best/worst preference pairs, and the DPO objective.

mod dpo;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{
    assemble_prompt, parse_tool_call, AgentAction, AgentError, ChatMessage, Policy, PolicySource, PromptVariant, ScriptBook, Track,
};
use crate::benchgen::render_product;
use crate::corpus::{Instruction, TaskKind};
use crate::eval::{oracle_call, result_accuracy, EvalError, Outcome};
use crate::jsonl::{read_records, write_records, JsonlError};
use crate::memory::{FeatureField, MemoryPlanner, TaskMemory};
use crate::retrieval::EmbeddingProvider;
use crate::webenv::{EnvState, FunctionCall, FunctionKind, FunctionParams, Payload, ToolCall, World};

pub use dpo::{dpo_dataset_loss, dpo_grad, dpo_loss, DpoPoint};

pub const SFT_FILE: &str = "sft.jsonl";
pub const PREFERENCES_FILE: &str = "preferences.jsonl";
pub const DEFAULT_HISTORY_CAP: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum AlignError {
    #[error("beta must be finite and positive, got {0}")]
    InvalidBeta(f64),
    #[error("log-probabilities must be finite")]
    NonFinite,
    #[error("empty input")]
    Empty,
    #[error("instruction {0} has no reference review")]
    MissingReference(String),
    #[error("instruction {0} has no target product in the catalog")]
    MissingTarget(String),
    #[error("label for instruction {instruction_id} does not fit {function}")]
    LabelShape { instruction_id: String, function: FunctionKind },
    #[error("preference for instruction {instruction_id} has score_best {best} <= score_worst {worst}")]
    NoMargin { instruction_id: String, best: f64, worst: f64 },
    #[error("need at least 2 candidates, asked for {0}")]
    TooFewCandidates(usize),
    #[error("provider returned an empty query")]
    EmptyQuery,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// Parameters of one task-tool call, serialized as its argument object.
/// `Raw` holds a completion that did not yield a usable call.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameters {
    Query(String),
    History(Vec<String>),
    ReviewText(String),
    Raw(String),
}

impl Parameters {
    pub fn function(&self) -> Option<FunctionKind> {
        match self {
            Parameters::Query(_) => Some(FunctionKind::SearchProductByQuery),
            Parameters::History(_) => Some(FunctionKind::GetRecommendationsByHistory),
            Parameters::ReviewText(_) => Some(FunctionKind::AddProductReview),
            Parameters::Raw(_) => None,
        }
    }

    pub fn to_tool_call(&self) -> Option<ToolCall> {
        match self {
            Parameters::Query(q) => Some(ToolCall::search(q.clone())),
            Parameters::History(h) => Some(ToolCall::recommend(h.clone())),
            Parameters::ReviewText(t) => Some(ToolCall::review(t.clone())),
            Parameters::Raw(_) => None,
        }
    }

    /// The parameters of `text` when it parses to a valid call of `function`.
    pub fn from_completion(text: &str, variant: PromptVariant, function: FunctionKind) -> Option<Self> {
        let AgentAction::Call { call } = parse_tool_call(text, variant) else { return None };
        let call = FunctionCall::from_tool_call(&call).ok()?;
        if call.kind != function {
            return None;
        }
        match call.params {
            FunctionParams::Query(q) => Some(Parameters::Query(q)),
            FunctionParams::History(h) => Some(Parameters::History(h)),
            FunctionParams::ReviewText(t) => Some(Parameters::ReviewText(t)),
            _ => None,
        }
    }
}

/// Model input: request, rendered task memory and the identified function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignInput {
    pub instruction: String,
    pub memory: String,
    pub function: FunctionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftExample {
    pub instruction_id: String,
    pub input: AlignInput,
    pub label: Parameters,
    /// Recommendation label built from entries outside the target's category.
    #[serde(default)]
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub instruction_id: String,
    pub input: AlignInput,
    pub p_best: Parameters,
    pub p_worst: Parameters,
    pub score_best: f64,
    pub score_worst: f64,
}

const QUERY_PROMPT: &str = "Write a short search query a shopper could type to find the product below. Reply with the query only.\n\n";

/// Heuristic SFT label for one instruction and its task memory.
///
/// Search asks `query_policy` for a query about the target product.
/// Recommendation takes memory products in the target's category, newest
/// first, up to `history_cap`; with none it takes the newest entries of any
/// category and sets the fallback flag. Review copies the reference text.
pub fn build_sft_label(
    instruction: &Instruction,
    memory: &TaskMemory,
    world: &World,
    query_policy: &mut dyn Policy,
    history_cap: usize,
) -> Result<(Parameters, bool), AlignError> {
    let missing_target = || AlignError::MissingTarget(instruction.instruction_id.clone());
    match instruction.task_kind {
        TaskKind::Review => instruction
            .reference_review()
            .map(|r| (Parameters::ReviewText(r.to_string()), false))
            .ok_or_else(|| AlignError::MissingReference(instruction.instruction_id.clone())),
        TaskKind::Search => {
            let target = instruction.target_product().and_then(|t| world.product(t)).ok_or_else(missing_target)?;
            let prompt = format!("{QUERY_PROMPT}{}", render_product(target));
            let text = query_policy.complete(&[ChatMessage::user(prompt)], 1)?.into_iter().next().unwrap_or_default();
            let query = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty())
                .unwrap_or_default()
                .trim_matches(|c| c == '"' || c == '\'')
                .trim()
                .to_string();
            if query.is_empty() {
                return Err(AlignError::EmptyQuery);
            }
            Ok((Parameters::Query(query), false))
        }
        TaskKind::Recommendation => {
            let target = instruction.target_product().and_then(|t| world.product(t)).ok_or_else(missing_target)?;
            let mut items: Vec<_> = memory
                .items
                .iter()
                .filter_map(|i| {
                    let id = i.features.get(FeatureField::ParentAsin)?;
                    Some((i.timestamp, id, i.features.get(FeatureField::Category)))
                })
                .collect();
            // Newest first; equal times keep memory order.
            items.sort_by(|a, b| b.0.cmp(&a.0));
            let pick = |same_only: bool| {
                let mut ids: Vec<String> = Vec::new();
                for (_, id, cat) in &items {
                    if (!same_only || *cat == Some(target.category.as_str())) && !ids.iter().any(|x| x == id) {
                        ids.push(id.to_string());
                    }
                }
                ids.truncate(history_cap);
                ids
            };
            let same = pick(true);
            if same.is_empty() {
                Ok((Parameters::History(pick(false)), true))
            } else {
                Ok((Parameters::History(same), false))
            }
        }
    }
}

/// Policy that answers a query prompt with the product title it contains.
/// Stands in for a provider when building search labels offline.
#[derive(Debug, Clone, Copy, Default)]
pub struct TitleQueryPolicy;

impl Policy for TitleQueryPolicy {
    fn complete(&mut self, messages: &[ChatMessage], n: usize) -> Result<Vec<String>, AgentError> {
        let title = messages
            .iter()
            .flat_map(|m| m.content.lines())
            .find_map(|l| l.strip_prefix("Title: "))
            .unwrap_or_default()
            .to_string();
        Ok(vec![title; n])
    }
}

/// The prompt a candidate sampler sees: the single-turn agent prompt over
/// the task memory.
pub fn candidate_prompt(instruction: &Instruction, input: &AlignInput, variant: PromptVariant) -> Vec<ChatMessage> {
    assemble_prompt(Track::Single, variant, instruction, &input.memory, &[])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Position among the sampled completions.
    pub index: usize,
    pub raw: String,
    /// `Raw` when the completion is not a valid call of the task function.
    pub params: Parameters,
}

impl Candidate {
    pub fn failed(&self) -> bool {
        matches!(self.params, Parameters::Raw(_))
    }
}

/// Draws `n` completions and parses each against `function`. Unusable ones
/// are kept as failed candidates; duplicates keep their first occurrence.
pub fn sample_candidates(
    policy: &mut dyn Policy,
    messages: &[ChatMessage],
    n: usize,
    function: FunctionKind,
    variant: PromptVariant,
) -> Result<Vec<Candidate>, AlignError> {
    if n < 2 {
        return Err(AlignError::TooFewCandidates(n));
    }
    let mut out: Vec<Candidate> = Vec::new();
    for (index, raw) in policy.complete(messages, n)?.into_iter().enumerate() {
        let params = Parameters::from_completion(&raw, variant, function).unwrap_or_else(|| Parameters::Raw(raw.clone()));
        if out.iter().all(|c| c.params != params) {
            out.push(Candidate { index, raw, params });
        }
    }
    Ok(out)
}

/// Result accuracy of `params` run through a fresh environment for the
/// instruction's user. Unusable parameters score 0.
pub fn score_parameters(
    params: &Parameters,
    instruction: &Instruction,
    world: &Arc<World>,
    embedder: &dyn EmbeddingProvider,
) -> Result<f64, AlignError> {
    let Some(call) = params.to_tool_call() else { return Ok(0.0) };
    if params.function() != Some(FunctionKind::for_task(instruction.task_kind)) {
        return Ok(0.0);
    }
    let mut env = EnvState::new(world.clone(), instruction.user_id.clone());
    let Ok(result) = env.dispatch(&call) else { return Ok(0.0) };
    let ids: Vec<String>;
    let outcome = match &result.payload {
        Payload::Products { items } => {
            ids = items.iter().map(|r| r.product.product_id.clone()).collect();
            Some(Outcome::Ranked(&ids))
        }
        Payload::ReviewPosted { review_index } => Some(Outcome::Review(&env.posted_reviews()[*review_index].review_text)),
        _ => None,
    };
    Ok(result_accuracy(instruction.task_kind, outcome, &instruction.ground_truth, embedder)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate: Candidate,
    pub score: f64,
}

pub fn score_candidates(
    candidates: Vec<Candidate>,
    instruction: &Instruction,
    world: &Arc<World>,
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<ScoredCandidate>, AlignError> {
    candidates
        .into_iter()
        .map(|candidate| {
            let score = score_parameters(&candidate.params, instruction, world, embedder)?;
            Ok(ScoredCandidate { candidate, score })
        })
        .collect()
}

/// Indices of the best and worst candidates, earliest on ties. `None` when
/// every score is equal.
pub fn select_preference_pair(scored: &[ScoredCandidate]) -> Option<(usize, usize)> {
    let mut best = 0;
    let mut worst = 0;
    for (i, s) in scored.iter().enumerate().skip(1) {
        if s.score > scored[best].score {
            best = i;
        }
        if s.score < scored[worst].score {
            worst = i;
        }
    }
    (scored.get(best)?.score > scored[worst].score).then_some((best, worst))
}

pub fn preference_record(instruction_id: &str, input: &AlignInput, scored: &[ScoredCandidate]) -> Option<PreferenceRecord> {
    let (b, w) = select_preference_pair(scored)?;
    Some(PreferenceRecord {
        instruction_id: instruction_id.to_string(),
        input: input.clone(),
        p_best: scored[b].candidate.params.clone(),
        p_worst: scored[w].candidate.params.clone(),
        score_best: scored[b].score,
        score_worst: scored[w].score,
    })
}

fn check_sft(e: &SftExample) -> Result<(), AlignError> {
    if e.label.function() != Some(e.input.function) {
        return Err(AlignError::LabelShape {
            instruction_id: e.instruction_id.clone(),
            function: e.input.function,
        });
    }
    Ok(())
}

fn check_preference(r: &PreferenceRecord) -> Result<(), AlignError> {
    if !(r.score_best > r.score_worst) {
        return Err(AlignError::NoMargin {
            instruction_id: r.instruction_id.clone(),
            best: r.score_best,
            worst: r.score_worst,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentFiles {
    pub sft: PathBuf,
    pub preferences: PathBuf,
}

/// Writes `sft.jsonl` and `preferences.jsonl` under `dir`, one record per
/// line. Every record is checked before anything is written.
pub fn export_alignment_datasets(
    dir: &Path,
    sft: &[SftExample],
    preferences: &[PreferenceRecord],
) -> Result<AlignmentFiles, AlignError> {
    sft.iter().try_for_each(check_sft)?;
    preferences.iter().try_for_each(check_preference)?;
    let files = AlignmentFiles {
        sft: dir.join(SFT_FILE),
        preferences: dir.join(PREFERENCES_FILE),
    };
    write_records(&files.sft, sft)?;
    write_records(&files.preferences, preferences)?;
    Ok(files)
}

pub fn read_sft(path: &Path) -> Result<Vec<SftExample>, AlignError> {
    Ok(read_records(path)?)
}

pub fn read_preferences(path: &Path) -> Result<Vec<PreferenceRecord>, AlignError> {
    Ok(read_records(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Completions sampled per instruction.
    pub candidates: usize,
    pub variant: PromptVariant,
    pub history_cap: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            candidates: 10,
            variant: PromptVariant::Plain,
            history_cap: DEFAULT_HISTORY_CAP,
        }
    }
}

/// SFT examples and preference records for every instruction, using
/// task-specific memory as the model input.
pub fn build_alignment_data(
    instructions: &[Instruction],
    world: &Arc<World>,
    planner: &MemoryPlanner,
    sampler: &dyn PolicySource,
    query_policy: &mut dyn Policy,
    config: &AlignConfig,
) -> Result<(Vec<SftExample>, Vec<PreferenceRecord>), AlignError> {
    let mut sft = Vec::with_capacity(instructions.len());
    let mut prefs = Vec::new();
    for instruction in instructions {
        let function = FunctionKind::for_task(instruction.task_kind);
        let memory = planner
            .task_memory(&instruction.user_id, &instruction.text, function)
            .map_err(EvalError::from)?;
        let input = AlignInput {
            instruction: instruction.text.clone(),
            memory: memory.render(),
            function,
        };
        let (label, fallback) = build_sft_label(instruction, &memory, world, query_policy, config.history_cap)?;
        sft.push(SftExample {
            instruction_id: instruction.instruction_id.clone(),
            input: input.clone(),
            label,
            fallback,
        });
        let messages = candidate_prompt(instruction, &input, config.variant);
        let mut policy = sampler.policy_for(instruction);
        let candidates = sample_candidates(policy.as_mut(), &messages, config.candidates, function, config.variant)?;
        let scored = score_candidates(candidates, instruction, world, planner.embedder())?;
        prefs.extend(preference_record(&instruction.instruction_id, &input, &scored));
    }
    Ok((sft, prefs))
}

/// Scripted candidate pools built from ground truth: the oracle call, the
/// request text reused as parameters, and an unparseable reply, repeated
/// to fill `n` slots.
pub fn oracle_candidate_book<'a>(instructions: impl IntoIterator<Item = &'a Instruction>, world: &World, n: usize) -> ScriptBook {
    let mut book = ScriptBook::default();
    for i in instructions {
        let weak = match i.task_kind {
            TaskKind::Search => ToolCall::search(i.text.clone()),
            TaskKind::Review => ToolCall::review(i.text.clone()),
            _ => ToolCall::recommend(world.catalog().first().map(|p| p.product_id.clone())),
        };
        let pool = [
            oracle_call(i, world).to_json_text(),
            weak.to_json_text(),
            "I am not sure which tool fits.".to_string(),
        ];
        book.insert(i.instruction_id.clone(), pool.iter().cycle().take(n).cloned());
    }
    book
}
