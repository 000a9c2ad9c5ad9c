use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChatMessage, PromptVariant};
use crate::corpus::Instruction;
use crate::templates::{render_prompt, TemplateId};
use crate::webenv::FunctionKind;

/// Shown in place of memory when the strategy yields nothing.
pub const NO_MEMORY_MARKER: &str = "(no memory)";

const PLAIN_FORMAT: &str = "Reply with exactly one JSON object of the form {\"name\": <function name>, \"arguments\": {<argument>: <value>}}.";

const REACT_FORMAT: &str = "Use the following format:\n\nThought: {some reasoning}\nAction: {some JSON format action argument}\n\nThe action must be a JSON object of the form {\"name\": <function name>, \"arguments\": {<argument>: <value>}}.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    Single,
    Multi,
}

impl Track {
    pub fn tools(self) -> &'static [FunctionKind] {
        match self {
            Track::Single => &FunctionKind::TASK_TOOLS,
            Track::Multi => &FunctionKind::ALL,
        }
    }

    fn template(self) -> TemplateId {
        match self {
            Track::Single => TemplateId::SingleTurnAgent,
            Track::Multi => TemplateId::MultiTurnAgent,
        }
    }
}

pub fn tool_schemas_text(tools: &[FunctionKind]) -> String {
    let schemas: Vec<_> = tools.iter().map(|k| k.schema()).collect();
    serde_json::to_string_pretty(&schemas).expect("schemas are plain JSON")
}

/// System prompt, the user's request, then (multi-turn only) the transcript.
pub fn assemble_prompt(
    track: Track,
    variant: PromptVariant,
    instruction: &Instruction,
    memory_text: &str,
    transcript: &[ChatMessage],
) -> Vec<ChatMessage> {
    debug_assert!(track == Track::Multi || transcript.is_empty());
    let memory = if memory_text.trim().is_empty() {
        NO_MEMORY_MARKER.to_string()
    } else {
        memory_text.to_string()
    };
    let bindings = BTreeMap::from([
        ("MEMORY".to_string(), memory),
        ("FUNCTIONS".to_string(), tool_schemas_text(track.tools())),
    ]);
    let mut system = render_prompt(track.template(), &bindings).expect("agent templates bind MEMORY and FUNCTIONS");
    system.push_str("\n\n");
    system.push_str(match variant {
        PromptVariant::Plain => PLAIN_FORMAT,
        PromptVariant::React => REACT_FORMAT,
    });
    let mut messages = vec![
        ChatMessage::system(system),
        ChatMessage::user(format!("user_id: {}\nrequest: {}", instruction.user_id, instruction.text)),
    ];
    messages.extend(transcript.iter().cloned());
    messages
}
