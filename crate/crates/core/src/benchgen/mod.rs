//! Prompt building and output parsing for benchmark construction: user
//! profiles, task instructions and the user-simulator persona.
//!
//! Nothing here touches the network. Generation goes through an
//! [`agent::Policy`](crate::agent::Policy) supplied by the caller.

pub mod choices;
mod profile;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentError, ChatMessage, Policy};
use crate::corpus::{Product, TaskKind, UserProfile, UserRecord};
use crate::templates::{render_prompt, render_text, TemplateError, TemplateId};

pub use crate::templates::TEMPLATE_VERSION;
pub use profile::{parse_profile_output, profile_to_json, serialize_profile};

pub const DEFAULT_RETRIES: usize = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchgenError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("profile output is not valid JSON at byte {offset}: {message}")]
    ProfileSyntax { offset: usize, message: String },
    #[error("profile output is missing key {0:?}")]
    MissingKey(String),
    #[error("profile key {key:?} has out-of-vocabulary value {value:?}")]
    OutOfVocabulary { key: String, value: String },
    #[error("{kind:?} instruction needs a {expected} target")]
    TargetMismatch { kind: TaskKind, expected: &'static str },
    #[error("history references unknown product {0}")]
    UnknownProduct(String),
    #[error("generated instruction is empty")]
    EmptyInstruction,
    #[error("invalid sampling settings: {0}")]
    Sampling(String),
    #[error("provider failed: {0}")]
    Provider(String),
}

impl From<AgentError> for BenchgenError {
    fn from(e: AgentError) -> Self {
        BenchgenError::Provider(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub template_id: TemplateId,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl GenerationRequest {
    pub fn new(template_id: TemplateId, prompt: String, temperature: f64, max_tokens: u32) -> Result<Self, BenchgenError> {
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(BenchgenError::Sampling(format!("temperature {temperature}")));
        }
        if max_tokens == 0 {
            return Err(BenchgenError::Sampling("max_tokens must be at least 1".into()));
        }
        Ok(Self {
            template_id,
            prompt,
            temperature,
            max_tokens,
        })
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        vec![ChatMessage::user(self.prompt.clone())]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub search_words: usize,
    pub recommendation_words: usize,
    pub review_words: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retries: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            search_words: 60,
            recommendation_words: 40,
            review_words: 80,
            temperature: 0.7,
            max_tokens: 1024,
            retries: DEFAULT_RETRIES,
        }
    }
}

impl GenerationConfig {
    pub fn word_limit(&self, kind: TaskKind) -> usize {
        match kind {
            TaskKind::Search => self.search_words,
            TaskKind::Recommendation => self.recommendation_words,
            TaskKind::Review => self.review_words,
        }
    }
}

/// What an instruction is generated about.
#[derive(Debug, Clone, PartialEq)]
pub enum InstructionTarget {
    Product(Product),
    Review { product: Product, text: String },
}

/// Product card shown to the generator and to the simulator.
pub fn render_product(p: &Product) -> String {
    let rating = p.average_rating.map_or_else(|| "unknown".to_string(), |r| format!("{r:.1}"));
    let mut lines = vec![
        format!("Title: {}", p.title),
        format!("Category: {}", p.category),
        format!("Price: {}", p.price_label()),
        format!("Store: {}", p.store),
        format!("Average rating: {rating} ({} ratings)", p.rating_count),
    ];
    if !p.features.is_empty() {
        lines.push(format!("Features: {}", p.features.join("; ")));
    }
    if !p.description.is_empty() {
        lines.push(format!("Description: {}", p.description));
    }
    lines.join("\n")
}

/// Profile-summary prompt over the user's history behaviors.
pub fn build_profile_prompt(
    user: &UserRecord,
    catalog: &BTreeMap<String, Product>,
    config: &GenerationConfig,
) -> Result<GenerationRequest, BenchgenError> {
    let mut history = Vec::with_capacity(user.history.len());
    for b in &user.history {
        let p = catalog
            .get(&b.product_id)
            .ok_or_else(|| BenchgenError::UnknownProduct(b.product_id.clone()))?;
        history.push(format!(
            "[{}] {} | category: {} | price: {} | store: {} | your rating: {} | review title: {} | review: {}",
            b.timestamp,
            p.title,
            p.category,
            p.price_label(),
            p.store,
            b.rating,
            b.review_title,
            b.review_text
        ));
    }
    let bindings = BTreeMap::from([
        ("GENDER".to_string(), choices::bracket_list(&choices::GENDERS)),
        ("AGE".to_string(), choices::bracket_list(&choices::AGES)),
        ("OCCUPATION".to_string(), choices::bracket_list(&choices::OCCUPATIONS)),
        ("PRICE SENSITIVITY".to_string(), choices::level_list(&choices::PRICE_SENSITIVITY)),
        ("DIVERSITY".to_string(), choices::level_list(&choices::DIVERSITY)),
        ("INTERACTION".to_string(), choices::level_list(&choices::INTERACTION)),
        ("FOCUS ASPECT".to_string(), choices::quoted_list(&choices::FOCUS_ASPECTS)),
        ("HISTORY".to_string(), history.join("\n")),
    ]);
    let prompt = render_prompt(TemplateId::Profile, &bindings)?;
    GenerationRequest::new(TemplateId::Profile, prompt, config.temperature, config.max_tokens)
}

fn sentence(description: &str) -> String {
    description.trim_end_matches('.').to_string()
}

fn persona_bindings(profile: &UserProfile) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("PROFILE".to_string(), serialize_profile(profile)),
        (
            "DIVERSITY".to_string(),
            sentence(choices::describe(&choices::DIVERSITY, profile.diversity_preference)),
        ),
        (
            "INTERACTION".to_string(),
            sentence(choices::describe(&choices::INTERACTION, profile.interaction_complexity)),
        ),
        ("FOCUS_ASPECT".to_string(), profile.focus_aspects.join(", ")),
        ("TONE_AND_STYLE".to_string(), profile.tone_and_style.clone()),
    ])
}

pub fn build_instruction_prompt(
    kind: TaskKind,
    user: &UserRecord,
    target: &InstructionTarget,
    config: &GenerationConfig,
) -> Result<GenerationRequest, BenchgenError> {
    let mut bindings = persona_bindings(&user.profile);
    bindings.insert("NUM".into(), config.word_limit(kind).to_string());
    let template = match (kind, target) {
        (TaskKind::Search, InstructionTarget::Product(p)) => {
            bindings.insert("PRODUCT".into(), render_product(p));
            TemplateId::SearchInstruction
        }
        (TaskKind::Recommendation, InstructionTarget::Product(p)) => {
            bindings.insert("PRODUCT".into(), render_product(p));
            TemplateId::RecInstruction
        }
        (TaskKind::Review, InstructionTarget::Review { product, text }) => {
            bindings.insert("PRODUCT".into(), render_product(product));
            bindings.insert("REVIEW".into(), text.clone());
            TemplateId::ReviewInstruction
        }
        (TaskKind::Review, _) => {
            return Err(BenchgenError::TargetMismatch {
                kind,
                expected: "review",
            })
        }
        (_, InstructionTarget::Review { .. }) => {
            return Err(BenchgenError::TargetMismatch {
                kind,
                expected: "product",
            })
        }
    };
    let prompt = render_prompt(template, &bindings)?;
    GenerationRequest::new(template, prompt, config.temperature, config.max_tokens)
}

/// Trims whitespace and one layer of wrapping quotes.
pub fn parse_instruction_output(text: &str) -> Result<String, BenchgenError> {
    let mut t = text.trim();
    for q in ['"', '\''] {
        if t.len() >= 2 && t.starts_with(q) && t.ends_with(q) {
            t = t[1..t.len() - 1].trim();
        }
    }
    if t.is_empty() {
        return Err(BenchgenError::EmptyInstruction);
    }
    Ok(t.to_string())
}

const SIMULATOR_REVIEW_BLOCK: &str = "Your review is as follows:\n\n<REVIEW>\n\n";

/// Persona prompt for the simulated user. The review block is kept only
/// when a review is supplied.
pub fn build_simulator_prompt(profile: &UserProfile, product: &Product, review: Option<&str>) -> Result<String, BenchgenError> {
    let mut bindings = BTreeMap::from([
        ("PROFILE".to_string(), serialize_profile(profile)),
        ("PRODUCT".to_string(), render_product(product)),
    ]);
    let full = TemplateId::UserSimulator.text();
    let text = match review {
        Some(r) => {
            bindings.insert("REVIEW".into(), r.to_string());
            full.to_string()
        }
        None => full.replacen(SIMULATOR_REVIEW_BLOCK, "", 1),
    };
    Ok(render_text(TemplateId::UserSimulator, &text, &bindings)?)
}

/// Asks `policy` for one completion at a time until `parse` accepts one,
/// making at most `retries + 1` attempts. Provider errors end the loop at
/// once; the last parse error surfaces when attempts run out.
pub fn generate_with_retry<T>(
    policy: &mut dyn Policy,
    request: &GenerationRequest,
    retries: usize,
    parse: impl Fn(&str) -> Result<T, BenchgenError>,
) -> Result<T, BenchgenError> {
    let messages = request.messages();
    let mut last = None;
    for attempt in 0..=retries {
        let text = policy.complete(&messages, 1)?.into_iter().next().unwrap_or_default();
        match parse(&text) {
            Ok(v) => return Ok(v),
            Err(e) => {
                tracing::warn!(attempt, template = ?request.template_id, error = %e, "unusable generation");
                last = Some(e);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

pub fn generate_profile(
    policy: &mut dyn Policy,
    user: &UserRecord,
    catalog: &BTreeMap<String, Product>,
    config: &GenerationConfig,
) -> Result<UserProfile, BenchgenError> {
    let req = build_profile_prompt(user, catalog, config)?;
    generate_with_retry(policy, &req, config.retries, parse_profile_output)
}

pub fn generate_instruction(
    policy: &mut dyn Policy,
    kind: TaskKind,
    user: &UserRecord,
    target: &InstructionTarget,
    config: &GenerationConfig,
) -> Result<String, BenchgenError> {
    let req = build_instruction_prompt(kind, user, target, config)?;
    generate_with_retry(policy, &req, config.retries, parse_instruction_output)
}
