use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};

use super::{AgentError, ChatMessage, Policy, PolicyConfig, Role};
use crate::transport::{HttpTransport, TransportConfig};

/// Counting gate that caps concurrent requests across policy clones.
#[derive(Debug)]
pub struct InflightGate {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InflightGate {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn enter(&self) -> GateTicket<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        GateTicket { gate: self }
    }
}

struct GateTicket<'a> {
    gate: &'a InflightGate,
}

impl Drop for GateTicket<'_> {
    fn drop(&mut self) {
        let mut active = self.gate.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.gate.freed.notify_one();
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    n: usize,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Upper bound on follow-up requests when a provider returns fewer than `n` choices.
const MAX_TOP_UPS: usize = 4;

/// Chat-completions client. Cheap to clone; clones share the connection
/// pool and the in-flight gate.
#[derive(Clone)]
pub struct ChatCompletionsPolicy {
    transport: Arc<HttpTransport>,
    gate: Arc<InflightGate>,
    model: String,
    temperature: f64,
    max_tokens: u32,
}

impl ChatCompletionsPolicy {
    pub fn new(config: &PolicyConfig, transport: TransportConfig, max_inflight: usize) -> Result<Self, AgentError> {
        if config.max_tokens == 0 {
            return Err(AgentError::Config("max_tokens must be at least 1".into()));
        }
        Ok(Self {
            transport: Arc::new(HttpTransport::new(transport)?),
            gate: Arc::new(InflightGate::new(max_inflight)),
            model: config.model.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
        })
    }

    fn request(&self, messages: &[ChatMessage], n: usize) -> Result<Vec<String>, AgentError> {
        let body = CompletionRequest {
            model: &self.model,
            messages: messages
                .iter()
                .map(|m| WireMessage {
                    // Tool output goes over the wire as a user turn: plain
                    // chat endpoints reject `tool` without a call id.
                    role: match m.role {
                        Role::System => "system",
                        Role::User | Role::Tool => "user",
                        Role::Assistant => "assistant",
                    },
                    content: &m.content,
                })
                .collect(),
            temperature: self.temperature,
            n,
            max_tokens: self.max_tokens,
        };
        let _ticket = self.gate.enter();
        let resp: CompletionResponse = self.transport.post_json(&body)?;
        Ok(resp.choices.into_iter().filter_map(|c| c.message.content).collect())
    }
}

impl Policy for ChatCompletionsPolicy {
    fn complete(&mut self, messages: &[ChatMessage], n: usize) -> Result<Vec<String>, AgentError> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..=MAX_TOP_UPS {
            if out.len() >= n {
                break;
            }
            out.extend(self.request(messages, n - out.len())?);
        }
        if out.is_empty() && n > 0 {
            return Err(AgentError::EmptyResponse);
        }
        out.truncate(n);
        Ok(out)
    }
}
