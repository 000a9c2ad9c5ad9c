//! Prompt templates bundled with the crate and a strict `<PLACEHOLDER>` renderer.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Bumped whenever any bundled template text changes.
pub const TEMPLATE_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Profile,
    SearchInstruction,
    RecInstruction,
    ReviewInstruction,
    UserSimulator,
    SingleTurnAgent,
    MultiTurnAgent,
}

impl TemplateId {
    pub const ALL: [TemplateId; 7] = [
        TemplateId::Profile,
        TemplateId::SearchInstruction,
        TemplateId::RecInstruction,
        TemplateId::ReviewInstruction,
        TemplateId::UserSimulator,
        TemplateId::SingleTurnAgent,
        TemplateId::MultiTurnAgent,
    ];

    pub fn text(self) -> &'static str {
        match self {
            TemplateId::Profile => include_str!("../assets/templates/profile.txt"),
            TemplateId::SearchInstruction => include_str!("../assets/templates/search_instruction.txt"),
            TemplateId::RecInstruction => include_str!("../assets/templates/rec_instruction.txt"),
            TemplateId::ReviewInstruction => include_str!("../assets/templates/review_instruction.txt"),
            TemplateId::UserSimulator => include_str!("../assets/templates/user_simulator.txt"),
            TemplateId::SingleTurnAgent => include_str!("../assets/templates/single_turn_agent.txt"),
            TemplateId::MultiTurnAgent => include_str!("../assets/templates/multi_turn_agent.txt"),
        }
    }

    /// Placeholder names in order of first appearance, without brackets.
    pub fn placeholders(self) -> Vec<&'static str> {
        let mut seen = BTreeSet::new();
        placeholder_re()
            .captures_iter(self.text())
            .filter_map(|c| c.get(1).map(|m| m.as_str()))
            .filter(|name| seen.insert(*name))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template:?} has no binding for <{placeholder}>")]
    MissingBinding { template: TemplateId, placeholder: String },
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<([A-Z][A-Z_ ]*[A-Z])>").expect("static pattern"))
}

/// Substitutes every placeholder. Every one must be bound; extra bindings
/// are ignored. Bound values are inserted as-is and never re-scanned.
pub fn render_prompt(id: TemplateId, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    render_text(id, id.text(), bindings)
}

pub(crate) fn render_text(id: TemplateId, text: &str, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    let re = placeholder_re();
    if let Some(missing) = re
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .find(|name| !bindings.contains_key(name))
    {
        return Err(TemplateError::MissingBinding {
            template: id,
            placeholder: missing,
        });
    }
    Ok(re.replace_all(text, |c: &regex::Captures| bindings[&c[1]].clone()).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind_all(id: TemplateId) -> BTreeMap<String, String> {
        id.placeholders().into_iter().map(|p| (p.to_string(), format!("[{p}]"))).collect()
    }

    #[test]
    fn every_template_renders_fully() {
        for id in TemplateId::ALL {
            let out = render_prompt(id, &bind_all(id)).unwrap();
            assert!(!placeholder_re().is_match(&out), "{id:?} left a placeholder");
        }
    }

    #[test]
    fn missing_binding_names_placeholder() {
        let mut b = bind_all(TemplateId::SingleTurnAgent);
        b.remove("MEMORY");
        let err = render_prompt(TemplateId::SingleTurnAgent, &b).unwrap_err();
        assert_eq!(
            err,
            TemplateError::MissingBinding {
                template: TemplateId::SingleTurnAgent,
                placeholder: "MEMORY".into()
            }
        );
    }

    #[test]
    fn values_are_not_rescanned() {
        let mut b = bind_all(TemplateId::SingleTurnAgent);
        b.insert("MEMORY".into(), "<FUNCTIONS>".into());
        let out = render_prompt(TemplateId::SingleTurnAgent, &b).unwrap();
        assert!(out.contains("<FUNCTIONS>"));
    }

    #[test]
    fn profile_placeholders_include_spaced_names() {
        let p = TemplateId::Profile.placeholders();
        assert!(p.contains(&"PRICE SENSITIVITY"));
        assert!(p.contains(&"HISTORY"));
    }
}
