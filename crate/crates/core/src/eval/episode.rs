//! Single-turn and multi-turn episode runners and the user simulator.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metrics::{function_accuracy, outcome_accuracy, result_accuracy, Outcome};
use super::EvalError;
use crate::agent::{assemble_prompt, parse_tool_call, AgentAction, ChatMessage, Policy, PromptVariant, Track};
use crate::corpus::{GroundTruth, Instruction, TaskKind};
use crate::retrieval::EmbeddingProvider;
use crate::webenv::{EnvState, FunctionKind, FunctionResult, Payload, ToolCall, World};

pub const DEFAULT_MAX_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stop,
    MaxSteps,
    SingleShot,
    ParseFailure,
    /// Provider or simulator error; the episode is excluded from reports.
    Failed,
}

/// Which task-tool call supplies the headline accuracies of a multi-turn
/// episode. Both are always recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradingRule {
    #[default]
    Last,
    Best,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "actor", rename_all = "snake_case")]
pub enum Turn {
    Agent {
        raw: String,
        action: AgentAction,
        /// What was sent to the environment; a parse failure in multi-turn
        /// is sent as `respond` with the raw text.
        dispatched: Option<ToolCall>,
        result: Option<FunctionResult>,
        error: Option<String>,
    },
    User {
        message: String,
    },
}

/// Result accuracy of one task-tool call, in call order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub step: usize,
    pub call: ToolCall,
    pub function_acc: f64,
    pub result_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub instruction_id: String,
    pub user_id: String,
    pub task_kind: TaskKind,
    pub track: Track,
    pub transcript: Vec<Turn>,
    pub steps: usize,
    pub graded_call: Option<ToolCall>,
    pub function_acc: f64,
    pub result_acc: f64,
    /// Search and recommendation only.
    pub outcome_acc: Option<f64>,
    pub last_result_acc: f64,
    pub best_result_acc: f64,
    pub attempts: Vec<Attempt>,
    pub termination: Termination,
    pub failure: Option<String>,
}

impl EpisodeRecord {
    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Everything an episode needs apart from the policy and the simulator.
pub struct EpisodeContext<'a> {
    pub instruction: &'a Instruction,
    pub world: Arc<World>,
    pub memory_text: String,
    pub embedder: &'a dyn EmbeddingProvider,
    pub variant: PromptVariant,
}

/// Per-call grading state accumulated while an episode runs.
struct Grader<'a> {
    ctx: &'a EpisodeContext<'a>,
    attempts: Vec<Attempt>,
    lists: Vec<Vec<String>>,
    /// Task-tool calls whose dispatch failed still count as the latest call.
    last: Option<Attempt>,
}

impl<'a> Grader<'a> {
    fn new(ctx: &'a EpisodeContext<'a>) -> Self {
        Self {
            ctx,
            attempts: Vec::new(),
            lists: Vec::new(),
            last: None,
        }
    }

    fn observe(&mut self, step: usize, call: &ToolCall, result: Option<&FunctionResult>, env: &EnvState) -> Result<(), EvalError> {
        let Some(kind) = call.kind().filter(|k| k.is_task_tool()) else {
            return Ok(());
        };
        let task = self.ctx.instruction.task_kind;
        let accepted = result.is_some();
        if let Some(ids) = result.and_then(FunctionResult::ranked_ids) {
            self.lists.push(ids.into_iter().map(str::to_string).collect());
        }
        let function_acc = function_accuracy(Some(call), accepted, task);
        let result_acc = if function_acc == 1.0 {
            let review;
            let outcome = match result.map(|r| &r.payload) {
                Some(Payload::Products { .. }) => Some(Outcome::Ranked(self.lists.last().expect("just pushed"))),
                Some(Payload::ReviewPosted { review_index }) => {
                    review = env.posted_reviews()[*review_index].review_text.clone();
                    Some(Outcome::Review(&review))
                }
                _ => None,
            };
            result_accuracy(task, outcome, &self.ctx.instruction.ground_truth, self.ctx.embedder)?
        } else {
            0.0
        };
        debug_assert!(kind.is_task_tool());
        let attempt = Attempt {
            step,
            call: call.clone(),
            function_acc,
            result_acc,
        };
        self.last = Some(attempt.clone());
        self.attempts.push(attempt);
        Ok(())
    }

    fn finish(self, track: Track, transcript: Vec<Turn>, steps: usize, termination: Termination, rule: GradingRule) -> EpisodeRecord {
        let instr = self.ctx.instruction;
        let best = self
            .attempts
            .iter()
            .fold(None::<&Attempt>, |acc, a| match acc {
                Some(b) if (b.function_acc, b.result_acc) >= (a.function_acc, a.result_acc) => Some(b),
                _ => Some(a),
            })
            .cloned();
        let graded = match rule {
            GradingRule::Last => self.last.clone(),
            GradingRule::Best => best.clone(),
        };
        let outcome_acc = match (&instr.ground_truth, instr.task_kind) {
            (GroundTruth::TargetProduct(t), TaskKind::Search | TaskKind::Recommendation) => {
                Some(outcome_accuracy(self.lists.iter().map(Vec::as_slice), t))
            }
            _ => None,
        };
        EpisodeRecord {
            instruction_id: instr.instruction_id.clone(),
            user_id: instr.user_id.clone(),
            task_kind: instr.task_kind,
            track,
            transcript,
            steps,
            graded_call: graded.as_ref().map(|a| a.call.clone()),
            function_acc: graded.as_ref().map_or(0.0, |a| a.function_acc),
            result_acc: graded.as_ref().map_or(0.0, |a| a.result_acc),
            outcome_acc,
            last_result_acc: self.last.as_ref().map_or(0.0, |a| a.result_acc),
            best_result_acc: best.as_ref().map_or(0.0, |a| a.result_acc),
            attempts: self.attempts,
            termination,
            failure: None,
        }
    }
}

fn failed(ctx: &EpisodeContext<'_>, track: Track, transcript: Vec<Turn>, steps: usize, error: String) -> EpisodeRecord {
    let mut rec = Grader::new(ctx).finish(track, transcript, steps, Termination::Failed, GradingRule::Last);
    rec.failure = Some(error);
    rec
}

fn dispatch(env: &mut EnvState, call: &ToolCall) -> (Option<FunctionResult>, Option<String>) {
    match env.dispatch(call) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// One completion, one parse, at most one dispatch.
pub fn run_single_turn(policy: &mut dyn Policy, ctx: &EpisodeContext<'_>) -> EpisodeRecord {
    let messages = assemble_prompt(Track::Single, ctx.variant, ctx.instruction, &ctx.memory_text, &[]);
    let raw = match policy.complete(&messages, 1) {
        Ok(mut texts) if !texts.is_empty() => texts.swap_remove(0),
        Ok(_) => return failed(ctx, Track::Single, Vec::new(), 1, "provider returned no completion".into()),
        Err(e) => return failed(ctx, Track::Single, Vec::new(), 1, e.to_string()),
    };
    let action = parse_tool_call(&raw, ctx.variant);
    let mut env = EnvState::new(ctx.world.clone(), ctx.instruction.user_id.clone());
    let mut grader = Grader::new(ctx);
    let (turn, termination) = match &action {
        AgentAction::ParseFailure { .. } => (
            Turn::Agent {
                raw,
                action: action.clone(),
                dispatched: None,
                result: None,
                error: None,
            },
            Termination::ParseFailure,
        ),
        AgentAction::Call { call } => {
            let (result, error) = dispatch(&mut env, call);
            if let Err(e) = grader.observe(1, call, result.as_ref(), &env) {
                return failed(ctx, Track::Single, Vec::new(), 1, e.to_string());
            }
            (
                Turn::Agent {
                    raw,
                    action: action.clone(),
                    dispatched: Some(call.clone()),
                    result,
                    error,
                },
                Termination::SingleShot,
            )
        }
    };
    let mut rec = grader.finish(Track::Single, vec![turn], 1, termination, GradingRule::Last);
    // A single-turn episode is graded on its only call, whatever its kind.
    if let AgentAction::Call { call } = action {
        rec.graded_call.get_or_insert(call);
    }
    rec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiTurnConfig {
    pub max_steps: usize,
    pub grading: GradingRule,
}

impl Default for MultiTurnConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            grading: GradingRule::Last,
        }
    }
}

/// Agent/environment/user loop. Every dispatched call counts as a step,
/// including `respond` and `stop`.
pub fn run_multi_turn(
    policy: &mut dyn Policy,
    simulator: &mut dyn Simulator,
    ctx: &EpisodeContext<'_>,
    config: MultiTurnConfig,
) -> EpisodeRecord {
    assert!(config.max_steps >= 1, "max_steps must be at least 1");
    let mut env = EnvState::new(ctx.world.clone(), ctx.instruction.user_id.clone());
    let mut grader = Grader::new(ctx);
    let mut chat: Vec<ChatMessage> = Vec::new();
    let mut transcript = Vec::new();
    let mut steps = 0;
    let mut termination = Termination::MaxSteps;

    while steps < config.max_steps {
        let messages = assemble_prompt(Track::Multi, ctx.variant, ctx.instruction, &ctx.memory_text, &chat);
        let raw = match policy.complete(&messages, 1) {
            Ok(mut texts) if !texts.is_empty() => texts.swap_remove(0),
            Ok(_) => return failed(ctx, Track::Multi, transcript, steps, "provider returned no completion".into()),
            Err(e) => return failed(ctx, Track::Multi, transcript, steps, e.to_string()),
        };
        let action = parse_tool_call(&raw, ctx.variant);
        let call = match &action {
            AgentAction::Call { call } => call.clone(),
            AgentAction::ParseFailure { raw } => ToolCall::respond(raw.clone()),
        };
        chat.push(ChatMessage::assistant(raw.clone()));
        steps += 1;
        let (result, error) = dispatch(&mut env, &call);
        if let Err(e) = grader.observe(steps, &call, result.as_ref(), &env) {
            return failed(ctx, Track::Multi, transcript, steps, e.to_string());
        }
        let kind = call.kind();
        let observation = match (&result, &error) {
            (Some(r), _) => r.observation(),
            (None, Some(e)) => format!("Error: {e}"),
            (None, None) => unreachable!("dispatch yields a result or an error"),
        };
        transcript.push(Turn::Agent {
            raw,
            action,
            dispatched: Some(call),
            result: result.clone(),
            error,
        });
        match (kind, result) {
            (Some(FunctionKind::Stop), Some(_)) => {
                termination = Termination::Stop;
                break;
            }
            (Some(FunctionKind::Respond), Some(r)) => {
                let Payload::Message { text } = &r.payload else { unreachable!("respond yields a message") };
                match simulator.reply(text) {
                    Ok(reply) => {
                        chat.push(ChatMessage::user(reply.clone()));
                        transcript.push(Turn::User { message: reply });
                    }
                    Err(e) => return failed(ctx, Track::Multi, transcript, steps, e.to_string()),
                }
            }
            _ => chat.push(ChatMessage::tool(observation)),
        }
    }
    grader.finish(Track::Multi, transcript, steps, termination, config.grading)
}

/// The simulated user: one reply per agent `respond`.
pub trait Simulator: Send {
    fn reply(&mut self, agent_message: &str) -> Result<String, EvalError>;
}

/// Replays queued replies; running dry is an error.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSimulator {
    queue: VecDeque<String>,
}

impl ScriptedSimulator {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self {
            queue: replies.into_iter().map(Into::into).collect(),
        }
    }
}

impl Simulator for ScriptedSimulator {
    fn reply(&mut self, _agent_message: &str) -> Result<String, EvalError> {
        self.queue.pop_front().ok_or(EvalError::SimulatorExhausted)
    }
}

/// Always answers with the same line.
#[derive(Debug, Clone)]
pub struct CannedSimulator(pub String);

impl Simulator for CannedSimulator {
    fn reply(&mut self, _agent_message: &str) -> Result<String, EvalError> {
        Ok(self.0.clone())
    }
}

/// Simulator backed by a text-generation policy and a persona prompt.
/// Roles are flipped: the agent speaks as `user`, the simulator as
/// `assistant`.
pub struct PolicySimulator {
    policy: Box<dyn Policy>,
    history: Vec<ChatMessage>,
}

impl PolicySimulator {
    pub fn new(policy: Box<dyn Policy>, persona_prompt: String) -> Self {
        Self {
            policy,
            history: vec![ChatMessage::system(persona_prompt)],
        }
    }
}

impl Simulator for PolicySimulator {
    fn reply(&mut self, agent_message: &str) -> Result<String, EvalError> {
        self.history.push(ChatMessage::user(agent_message));
        let reply = self
            .policy
            .complete(&self.history, 1)?
            .into_iter()
            .next()
            .map(|s| s.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or_default().to_string())
            .unwrap_or_default();
        self.history.push(ChatMessage::assistant(reply.clone()));
        Ok(reply)
    }
}
