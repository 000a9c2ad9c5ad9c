//! Benchmark environment and evaluation harness for personalized shopping
//! web agents.
//!
//! The crate is organised around the agent/environment loop:
//!
//! * [`corpus`] holds the catalog, users and instructions, plus a seeded
//!   fixture generator.
//! * [`retrieval`] provides the BM25 index and the embedding provider.
//! * [`webenv`] is the function-call environment (search, recommendation,
//!   review, respond, stop).
//! * [`memory`] builds per-user memory banks and task-specific memory.
//! * [`agent`] assembles prompts, parses tool calls and talks to providers.
//! * [`eval`] runs single-turn and multi-turn episodes and aggregates metrics.
//! * [`align`] builds SFT and preference datasets and evaluates the DPO loss.
//! * [`benchgen`] renders the benchmark-construction prompts and parses
//!   their outputs.

pub mod agent;
pub mod align;
pub mod benchgen;
pub mod corpus;
pub mod eval;
pub mod jsonl;
pub mod memory;
pub mod retrieval;
pub mod templates;
pub mod transport;
pub mod webenv;

pub use corpus::{BehaviorRecord, DatasetBundle, Instruction, Product, TaskKind, UserProfile, UserRecord};

pub use webenv::{FunctionCall, FunctionKind, FunctionResult, ToolCall};
