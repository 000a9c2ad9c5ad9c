use serde_json::{Deserializer, Map, Value};

use super::{AgentAction, PromptVariant};
use crate::webenv::ToolCall;

const ACTION_MARKER: &str = "Action:";

/// Extracts the first `{"name": ..., "arguments": {...}}` object from model
/// output. Total: anything unparseable becomes [`AgentAction::ParseFailure`].
///
/// With [`PromptVariant::React`] only text after the first `Action:` marker
/// is considered. Arguments given as a JSON-encoded string are decoded, and
/// a missing `arguments` key reads as `{}`.
pub fn parse_tool_call(text: &str, variant: PromptVariant) -> AgentAction {
    let region = match variant {
        PromptVariant::Plain => Some(text),
        PromptVariant::React => text.find(ACTION_MARKER).map(|i| &text[i + ACTION_MARKER.len()..]),
    };
    region
        .and_then(first_call)
        .map(|call| AgentAction::Call { call })
        .unwrap_or_else(|| AgentAction::ParseFailure { raw: text.to_string() })
}

fn first_call(text: &str) -> Option<ToolCall> {
    text.char_indices()
        .filter(|&(_, c)| c == '{')
        .find_map(|(i, _)| {
            let value = Deserializer::from_str(&text[i..]).into_iter::<Value>().next()?.ok()?;
            as_call(value)
        })
}

fn as_call(value: Value) -> Option<ToolCall> {
    let Value::Object(mut map) = value else { return None };
    let Some(Value::String(name)) = map.remove("name") else { return None };
    let arguments = match map.remove("arguments") {
        None | Some(Value::Null) => Value::Object(Map::new()),
        Some(Value::Object(args)) => Value::Object(args),
        Some(Value::String(encoded)) => match serde_json::from_str::<Value>(&encoded) {
            Ok(Value::Object(args)) => Value::Object(args),
            _ => return None,
        },
        Some(_) => return None,
    };
    Some(ToolCall { name, arguments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn call(text: &str, variant: PromptVariant) -> ToolCall {
        match parse_tool_call(text, variant) {
            AgentAction::Call { call } => call,
            other => panic!("expected call, got {other:?}"),
        }
    }

    #[test]
    fn bare_stop() {
        assert_eq!(call(r#"{"name":"stop","arguments":{}}"#, PromptVariant::Plain), ToolCall::stop());
    }

    #[test]
    fn react_action() {
        let text = r#"Thought: need brand. Action: {"name":"respond","arguments":{"message":"Which brand?"}}"#;
        assert_eq!(call(text, PromptVariant::React), ToolCall::respond("Which brand?"));
    }

    #[test]
    fn react_ignores_objects_before_marker() {
        let text = r#"Thought: {"name":"stop","arguments":{}} Action: {"name":"respond","arguments":{"message":"hi"}}"#;
        assert_eq!(call(text, PromptVariant::React), ToolCall::respond("hi"));
        assert!(matches!(
            parse_tool_call(r#"{"name":"stop","arguments":{}}"#, PromptVariant::React),
            AgentAction::ParseFailure { .. }
        ));
    }

    #[test]
    fn prose_is_failure() {
        assert_eq!(
            parse_tool_call("I think we should search.", PromptVariant::Plain),
            AgentAction::ParseFailure {
                raw: "I think we should search.".into()
            }
        );
    }

    #[test]
    fn chatty_output_and_nesting() {
        let text = "Sure! Here you go:\n```json\n{\"tool\": {\"name\": \"search_product_by_query\", \"arguments\": {\"query\": \"tea\"}}}\n```\nThanks";
        assert_eq!(call(text, PromptVariant::Plain), ToolCall::search("tea"));
    }

    #[test]
    fn string_encoded_arguments() {
        let text = r#"{"name":"add_product_review","arguments":"{\"review_text\":\"ok\"}"}"#;
        assert_eq!(call(text, PromptVariant::Plain), ToolCall::review("ok"));
    }

    #[test]
    fn schema_is_not_checked_here() {
        let text = r#"{"name":"search_product_by_query","arguments":{"query":["a"]}}"#;
        assert_eq!(call(text, PromptVariant::Plain).arguments, json!({"query": ["a"]}));
    }

    proptest! {
        #[test]
        fn parsing_is_total(text in ".{0,200}") {
            for v in [PromptVariant::Plain, PromptVariant::React] {
                let _ = parse_tool_call(&text, v);
            }
        }
    }
}
