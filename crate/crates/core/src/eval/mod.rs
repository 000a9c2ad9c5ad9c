//! Scoring, episode runners, aggregation and profile-consistency checks.

mod consistency;
mod episode;
mod metrics;
mod report;
mod runner;
mod scripts;

pub use consistency::*;
pub use episode::*;
pub use metrics::*;
pub use report::*;
pub use runner::*;
pub use scripts::*;

use crate::agent::AgentError;
use crate::benchgen::BenchgenError;
use crate::memory::MemoryError;
use crate::retrieval::RetrievalError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Benchgen(#[from] BenchgenError),
    #[error("simulator has no scripted reply left")]
    SimulatorExhausted,
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("ranking for user {user_id} is not a permutation of the candidates")]
    NotAPermutation { user_id: String },
    #[error("need at least {needed} {what}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },
    #[error("{0}")]
    Config(String),
}
