//! Agent side of the loop: chat messages, prompt assembly, tool-call parsing
//! and text-generation providers.

mod parse;
mod prompt;
mod provider;

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Instruction;
use crate::jsonl::{read_records, write_records, JsonlError};
use crate::transport::TransportError;
use crate::webenv::ToolCall;

pub use parse::parse_tool_call;
pub use prompt::{assemble_prompt, tool_schemas_text, Track, NO_MEMORY_MARKER};
pub use provider::{ChatCompletionsPolicy, InflightGate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }

    pub fn tool(content: impl Into<String>) -> Self {
        Self::new(Role::Tool, content)
    }
}

/// What the agent did with one completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentAction {
    Call { call: ToolCall },
    ParseFailure { raw: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptVariant {
    #[default]
    Plain,
    /// `Thought: ... Action: {json}` format.
    React,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    /// Candidates per request (beam width / number of samples).
    pub n: usize,
    pub max_tokens: u32,
    pub variant: PromptVariant,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: "gpt-4o-mini".to_string(),
            temperature: 0.0,
            n: 1,
            max_tokens: 512,
            variant: PromptVariant::Plain,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("scripted queue exhausted: {requested} completion(s) requested, {remaining} left")]
    QueueExhausted { requested: usize, remaining: usize },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("provider returned no usable choices")]
    EmptyResponse,
    #[error("invalid policy configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Script(#[from] JsonlError),
}

/// A text generator: messages in, `n` candidate texts out.
pub trait Policy: Send {
    fn complete(&mut self, messages: &[ChatMessage], n: usize) -> Result<Vec<String>, AgentError>;
}

/// Replays queued responses in order, ignoring the prompt.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    queue: VecDeque<String>,
}

impl ScriptedPolicy {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self {
            queue: responses.into_iter().map(Into::into).collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl Policy for ScriptedPolicy {
    fn complete(&mut self, _messages: &[ChatMessage], n: usize) -> Result<Vec<String>, AgentError> {
        if self.queue.len() < n {
            return Err(AgentError::QueueExhausted {
                requested: n,
                remaining: self.queue.len(),
            });
        }
        Ok(self.queue.drain(..n).collect())
    }
}

/// Hands out one fresh policy per episode.
pub trait PolicySource: Send + Sync {
    fn policy_for(&self, instruction: &Instruction) -> Box<dyn Policy>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub instruction_id: String,
    pub responses: Vec<String>,
}

/// Per-instruction scripted responses, stored one [`ScriptEntry`] per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptBook {
    scripts: BTreeMap<String, Vec<String>>,
}

impl ScriptBook {
    pub fn insert<S: Into<String>>(&mut self, instruction_id: impl Into<String>, responses: impl IntoIterator<Item = S>) {
        self.scripts
            .insert(instruction_id.into(), responses.into_iter().map(Into::into).collect());
    }

    pub fn get(&self, instruction_id: &str) -> Option<&[String]> {
        self.scripts.get(instruction_id).map(Vec::as_slice)
    }

    /// A fresh policy over the responses stored under `key`; an unknown key
    /// gives an empty queue.
    pub fn policy(&self, key: &str) -> ScriptedPolicy {
        ScriptedPolicy::new(self.get(key).unwrap_or_default().iter().cloned())
    }

    pub fn len(&self) -> usize {
        self.scripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scripts.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, JsonlError> {
        let entries: Vec<ScriptEntry> = read_records(path)?;
        let mut book = Self::default();
        for e in entries {
            book.insert(e.instruction_id, e.responses);
        }
        Ok(book)
    }

    pub fn save(&self, path: &Path) -> Result<(), JsonlError> {
        let entries: Vec<ScriptEntry> = self
            .scripts
            .iter()
            .map(|(id, r)| ScriptEntry {
                instruction_id: id.clone(),
                responses: r.clone(),
            })
            .collect();
        write_records(path, &entries)
    }
}

impl PolicySource for ScriptBook {
    fn policy_for(&self, instruction: &Instruction) -> Box<dyn Policy> {
        Box::new(self.policy(&instruction.instruction_id))
    }
}

impl PolicySource for ChatCompletionsPolicy {
    fn policy_for(&self, _instruction: &Instruction) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}
