//! Batch execution of episodes over an instruction set.

use std::collections::HashMap;
use std::hash::Hasher;
use std::sync::Arc;

use fnv::FnvHasher;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{run_multi_turn, run_single_turn, CannedSimulator, EpisodeContext, EpisodeRecord, MultiTurnConfig, PolicySimulator, Simulator};
use super::EvalError;
use crate::agent::{ChatCompletionsPolicy, PolicySource, PromptVariant, Track};
use crate::benchgen::build_simulator_prompt;
use crate::corpus::{GroundTruth, Instruction, Product, UserRecord};
use crate::memory::MemoryPlanner;
use crate::webenv::{FunctionKind, World};

/// Seed for one episode: the run seed mixed with the instruction id.
pub fn episode_seed(seed: u64, instruction_id: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(instruction_id.as_bytes());
    seed ^ h.finish()
}

/// Product an instruction is about: the target, or for a review the
/// product whose recorded review matches the reference.
pub fn instruction_product<'a>(instruction: &'a Instruction, user: &'a UserRecord) -> Option<&'a str> {
    match &instruction.ground_truth {
        GroundTruth::TargetProduct(id) => Some(id),
        GroundTruth::ReferenceReview(text) => user
            .behaviors()
            .filter(|b| &b.review_text == text)
            .last()
            .map(|b| b.product_id.as_str()),
    }
}

pub trait SimulatorSource: Send + Sync {
    fn simulator_for(&self, instruction: &Instruction) -> Result<Box<dyn Simulator>, EvalError>;
}

impl SimulatorSource for CannedSimulator {
    fn simulator_for(&self, _instruction: &Instruction) -> Result<Box<dyn Simulator>, EvalError> {
        Ok(Box::new(self.clone()))
    }
}

/// Provider-backed simulators bound to each instruction's user and product.
pub struct PersonaSimulators {
    users: HashMap<String, UserRecord>,
    catalog: HashMap<String, Product>,
    policy: ChatCompletionsPolicy,
}

impl PersonaSimulators {
    pub fn new(users: &[UserRecord], catalog: &[Product], policy: ChatCompletionsPolicy) -> Self {
        Self {
            users: users.iter().map(|u| (u.user_id.clone(), u.clone())).collect(),
            catalog: catalog.iter().map(|p| (p.product_id.clone(), p.clone())).collect(),
            policy,
        }
    }
}

impl SimulatorSource for PersonaSimulators {
    fn simulator_for(&self, instruction: &Instruction) -> Result<Box<dyn Simulator>, EvalError> {
        let user = self
            .users
            .get(&instruction.user_id)
            .ok_or_else(|| EvalError::Config(format!("unknown user {}", instruction.user_id)))?;
        let product = instruction_product(instruction, user)
            .and_then(|id| self.catalog.get(id))
            .ok_or_else(|| EvalError::Config(format!("no product for instruction {}", instruction.instruction_id)))?;
        let prompt = build_simulator_prompt(&user.profile, product, instruction.reference_review())?;
        Ok(Box::new(PolicySimulator::new(Box::new(self.policy.clone()), prompt)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub track: Track,
    pub variant: PromptVariant,
    pub multi: MultiTurnConfig,
    pub seed: u64,
    pub jobs: usize,
}

/// Runs every instruction as an independent episode, in parallel on
/// `spec.jobs` threads. Output order follows `instructions`.
pub fn run_episodes(
    instructions: &[Instruction],
    world: Arc<World>,
    planner: &MemoryPlanner,
    policies: &dyn PolicySource,
    simulators: Option<&dyn SimulatorSource>,
    spec: &RunSpec,
) -> Result<Vec<EpisodeRecord>, EvalError> {
    if spec.track == Track::Multi && simulators.is_none() {
        return Err(EvalError::Config("multi-turn runs need a simulator".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    pool.install(|| {
        instructions
            .par_iter()
            .map(|instruction| {
                let seed = episode_seed(spec.seed, &instruction.instruction_id);
                let kind = FunctionKind::for_task(instruction.task_kind);
                let memory_text = planner.memory_text(&instruction.user_id, &instruction.text, kind, seed)?;
                let ctx = EpisodeContext {
                    instruction,
                    world: world.clone(),
                    memory_text,
                    embedder: planner.embedder(),
                    variant: spec.variant,
                };
                let mut policy = policies.policy_for(instruction);
                Ok(match spec.track {
                    Track::Single => run_single_turn(policy.as_mut(), &ctx),
                    Track::Multi => {
                        let mut sim = simulators.expect("checked above").simulator_for(instruction)?;
                        run_multi_turn(policy.as_mut(), sim.as_mut(), &ctx, spec.multi)
                    }
                })
            })
            .collect()
    })
}
