//! The abstracted web environment: five callable functions behind a
//! schema-checked dispatcher.
//!
//! Parameter schemas are fixed:
//!
//! | function                          | arguments                      |
//! |-----------------------------------|--------------------------------|
//! | `search_product_by_query`         | `{"query": string}`            |
//! | `get_recommendations_by_history`  | `{"history": [string, ...]}`   |
//! | `add_product_review`              | `{"review_text": string}`      |
//! | `respond`                         | `{"message": string}`          |
//! | `stop`                            | `{}`                           |

mod recommender;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::corpus::{Product, TaskKind};
use crate::retrieval::{tokenize, Bm25Index, IndexField, RetrievalError, DEFAULT_FIELDS};

pub use recommender::{train_cooc, training_sequences, CoocModel, PrecomputedRecommender, Recommender};

/// Number of products returned by search and recommendation.
pub const RESULT_LIST_LEN: usize = 10;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("malformed parameters for {function}: {message}")]
    MalformedParameters { function: FunctionKind, message: String },
}

impl EnvError {
    fn malformed(function: FunctionKind, message: impl Into<String>) -> Self {
        EnvError::MalformedParameters {
            function,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    SearchProductByQuery,
    GetRecommendationsByHistory,
    AddProductReview,
    Respond,
    Stop,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 5] = [
        FunctionKind::SearchProductByQuery,
        FunctionKind::GetRecommendationsByHistory,
        FunctionKind::AddProductReview,
        FunctionKind::Respond,
        FunctionKind::Stop,
    ];

    pub const TASK_TOOLS: [FunctionKind; 3] = [
        FunctionKind::SearchProductByQuery,
        FunctionKind::GetRecommendationsByHistory,
        FunctionKind::AddProductReview,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::SearchProductByQuery => "search_product_by_query",
            FunctionKind::GetRecommendationsByHistory => "get_recommendations_by_history",
            FunctionKind::AddProductReview => "add_product_review",
            FunctionKind::Respond => "respond",
            FunctionKind::Stop => "stop",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_task_tool(self) -> bool {
        Self::TASK_TOOLS.contains(&self)
    }

    /// The task tool that serves a task kind.
    pub fn for_task(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Search => FunctionKind::SearchProductByQuery,
            TaskKind::Recommendation => FunctionKind::GetRecommendationsByHistory,
            TaskKind::Review => FunctionKind::AddProductReview,
        }
    }

    /// Function description in the chat-completions tool format.
    pub fn schema(self) -> Value {
        let (description, properties, required): (&str, Value, Vec<&str>) = match self {
            FunctionKind::SearchProductByQuery => (
                "Search the catalog with a text query and return the 10 most similar products.",
                json!({"query": {"type": "string", "description": "search query"}}),
                vec!["query"],
            ),
            FunctionKind::GetRecommendationsByHistory => (
                "Recommend 10 products given a sequence of product IDs (parent ASINs), oldest first.",
                json!({"history": {"type": "array", "items": {"type": "string"}, "description": "product IDs"}}),
                vec!["history"],
            ),
            FunctionKind::AddProductReview => (
                "Post a review for the user's purchased product.",
                json!({"review_text": {"type": "string", "description": "full review text"}}),
                vec!["review_text"],
            ),
            FunctionKind::Respond => (
                "Send a message to the user.",
                json!({"message": {"type": "string", "description": "message for the user"}}),
                vec!["message"],
            ),
            FunctionKind::Stop => ("End the current task.", json!({}), vec![]),
        };
        json!({
            "name": self.name(),
            "description": description,
            "parameters": {
                "type": "object",
                "properties": properties,
                "required": required,
                "additionalProperties": false,
            }
        })
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A function call as emitted by an agent: a name and an argument object,
/// not yet checked against any schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    #[serde(default)]
    pub arguments: Value,
}

impl ToolCall {
    pub fn new(kind: FunctionKind, arguments: Value) -> Self {
        Self {
            name: kind.name().to_string(),
            arguments,
        }
    }

    pub fn search(query: impl Into<String>) -> Self {
        Self::new(FunctionKind::SearchProductByQuery, json!({ "query": query.into() }))
    }

    pub fn recommend<S: Into<String>>(history: impl IntoIterator<Item = S>) -> Self {
        let ids: Vec<String> = history.into_iter().map(Into::into).collect();
        Self::new(FunctionKind::GetRecommendationsByHistory, json!({ "history": ids }))
    }

    pub fn review(text: impl Into<String>) -> Self {
        Self::new(FunctionKind::AddProductReview, json!({ "review_text": text.into() }))
    }

    pub fn respond(message: impl Into<String>) -> Self {
        Self::new(FunctionKind::Respond, json!({ "message": message.into() }))
    }

    pub fn stop() -> Self {
        Self::new(FunctionKind::Stop, json!({}))
    }

    pub fn kind(&self) -> Option<FunctionKind> {
        FunctionKind::from_name(&self.name)
    }

    /// Compact JSON text of the call, as an agent would emit it.
    pub fn to_json_text(&self) -> String {
        serde_json::to_string(self).expect("tool calls always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionParams {
    Query(String),
    History(Vec<String>),
    ReviewText(String),
    Message(String),
    None,
}

/// A schema-valid function call.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionCall {
    pub kind: FunctionKind,
    pub params: FunctionParams,
}

impl FunctionCall {
    /// Validates a raw call against the fixed schema table. Extra keys,
    /// missing keys and wrong JSON types are all rejected.
    pub fn from_tool_call(call: &ToolCall) -> Result<Self, EnvError> {
        let kind = call.kind().ok_or_else(|| EnvError::UnknownFunction(call.name.clone()))?;
        let empty = Map::new();
        let args = match &call.arguments {
            Value::Object(map) => map,
            Value::Null => &empty,
            other => {
                return Err(EnvError::malformed(kind, format!("arguments must be an object, got {other}")));
            }
        };
        let expected: &[&str] = match kind {
            FunctionKind::SearchProductByQuery => &["query"],
            FunctionKind::GetRecommendationsByHistory => &["history"],
            FunctionKind::AddProductReview => &["review_text"],
            FunctionKind::Respond => &["message"],
            FunctionKind::Stop => &[],
        };
        if let Some(extra) = args.keys().find(|k| !expected.contains(&k.as_str())) {
            return Err(EnvError::malformed(kind, format!("unexpected argument {extra:?}")));
        }
        let string_arg = |key: &str| -> Result<String, EnvError> {
            match args.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(other) => Err(EnvError::malformed(kind, format!("{key} must be a string, got {other}"))),
                None => Err(EnvError::malformed(kind, format!("missing argument {key:?}"))),
            }
        };
        let params = match kind {
            FunctionKind::SearchProductByQuery => FunctionParams::Query(string_arg("query")?),
            FunctionKind::AddProductReview => FunctionParams::ReviewText(string_arg("review_text")?),
            FunctionKind::Respond => FunctionParams::Message(string_arg("message")?),
            FunctionKind::Stop => FunctionParams::None,
            FunctionKind::GetRecommendationsByHistory => match args.get("history") {
                Some(Value::Array(items)) => FunctionParams::History(
                    items
                        .iter()
                        .map(|v| match v {
                            Value::String(s) => Ok(s.clone()),
                            other => Err(EnvError::malformed(kind, format!("history entries must be strings, got {other}"))),
                        })
                        .collect::<Result<_, _>>()?,
                ),
                Some(other) => return Err(EnvError::malformed(kind, format!("history must be an array, got {other}"))),
                None => return Err(EnvError::malformed(kind, "missing argument \"history\"")),
            },
        };
        Ok(Self { kind, params })
    }

    pub fn to_tool_call(&self) -> ToolCall {
        let arguments = match &self.params {
            FunctionParams::Query(q) => json!({ "query": q }),
            FunctionParams::History(h) => json!({ "history": h }),
            FunctionParams::ReviewText(t) => json!({ "review_text": t }),
            FunctionParams::Message(m) => json!({ "message": m }),
            FunctionParams::None => json!({}),
        };
        ToolCall::new(self.kind, arguments)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedProduct {
    /// 1-based.
    pub rank: usize,
    pub score: f64,
    pub product: Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Products { items: Vec<RankedProduct> },
    ReviewPosted { review_index: usize },
    Message { text: String },
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionResult {
    pub kind: FunctionKind,
    pub payload: Payload,
}

impl FunctionResult {
    pub fn ranked_ids(&self) -> Option<Vec<&str>> {
        match &self.payload {
            Payload::Products { items } => Some(items.iter().map(|r| r.product.product_id.as_str()).collect()),
            _ => None,
        }
    }

    /// Text shown to the agent for this result.
    pub fn observation(&self) -> String {
        match &self.payload {
            Payload::Products { items } => {
                let mut out = String::new();
                for r in items {
                    let p = &r.product;
                    out.push_str(&format!(
                        "{}. [{}] {} | category: {} | price: {} | store: {} | rating: {} ({} ratings)\n",
                        r.rank,
                        p.product_id,
                        p.title,
                        p.category,
                        p.price_label(),
                        p.store,
                        p.average_rating.map(|v| format!("{v:.1}")).unwrap_or_else(|| "unknown".into()),
                        p.rating_count
                    ));
                }
                out
            }
            Payload::ReviewPosted { .. } => "Review posted.".to_string(),
            Payload::Message { text } => text.clone(),
            Payload::Terminated => "Task ended.".to_string(),
        }
    }
}

/// Catalog, index and recommender shared by every episode.
pub struct World {
    catalog: Vec<Product>,
    by_id: HashMap<String, usize>,
    index: Bm25Index,
    recommender: Box<dyn Recommender>,
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World").field("products", &self.catalog.len()).finish_non_exhaustive()
    }
}

impl World {
    pub fn new(catalog: Vec<Product>, index: Bm25Index, recommender: Box<dyn Recommender>) -> Self {
        let by_id = catalog.iter().enumerate().map(|(i, p)| (p.product_id.clone(), i)).collect();
        Self {
            catalog,
            by_id,
            index,
            recommender,
        }
    }

    /// Indexes the default fields and uses the given recommender.
    pub fn build(catalog: Vec<Product>, recommender: Box<dyn Recommender>) -> Result<Self, RetrievalError> {
        Self::build_with_fields(catalog, &DEFAULT_FIELDS, recommender)
    }

    pub fn build_with_fields(
        catalog: Vec<Product>,
        fields: &[IndexField],
        recommender: Box<dyn Recommender>,
    ) -> Result<Self, RetrievalError> {
        let index = Bm25Index::build(&catalog, fields)?;
        Ok(Self::new(catalog, index, recommender))
    }

    pub fn catalog(&self) -> &[Product] {
        &self.catalog
    }

    pub fn index(&self) -> &Bm25Index {
        &self.index
    }

    pub fn product(&self, id: &str) -> Option<&Product> {
        self.by_id.get(id).map(|&i| &self.catalog[i])
    }

    fn ranked(&self, scored: Vec<(String, f64)>) -> Vec<RankedProduct> {
        scored
            .into_iter()
            .enumerate()
            .map(|(i, (id, score))| RankedProduct {
                rank: i + 1,
                score,
                product: self.product(&id).expect("ranked ids come from the catalog").clone(),
            })
            .collect()
    }

    pub fn search_product_by_query(&self, query: &str) -> Result<Vec<RankedProduct>, EnvError> {
        if tokenize(query).is_empty() {
            return Err(EnvError::malformed(FunctionKind::SearchProductByQuery, "query has no searchable terms"));
        }
        Ok(self.ranked(self.index.query_top_k(query, RESULT_LIST_LEN)))
    }

    /// Ids absent from the catalog are skipped; if nothing is left the call
    /// is malformed.
    pub fn get_recommendations_by_history(&self, history: &[String]) -> Result<Vec<RankedProduct>, EnvError> {
        let known: Vec<String> = history.iter().filter(|id| self.by_id.contains_key(*id)).cloned().collect();
        if known.is_empty() {
            return Err(EnvError::malformed(
                FunctionKind::GetRecommendationsByHistory,
                "history contains no known product ids",
            ));
        }
        Ok(self.ranked(self.recommender.recommend(&known, RESULT_LIST_LEN)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostedReview {
    pub user_id: String,
    pub review_text: String,
    pub step: usize,
}

/// Per-episode environment state over a shared [`World`].
#[derive(Debug, Clone)]
pub struct EnvState {
    world: Arc<World>,
    user_id: String,
    posted_reviews: Vec<PostedReview>,
    step: usize,
}

impl EnvState {
    pub fn new(world: Arc<World>, user_id: impl Into<String>) -> Self {
        Self {
            world,
            user_id: user_id.into(),
            posted_reviews: Vec::new(),
            step: 0,
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn posted_reviews(&self) -> &[PostedReview] {
        &self.posted_reviews
    }

    /// Validates and executes a call. `respond` and `stop` never touch state.
    pub fn dispatch(&mut self, call: &ToolCall) -> Result<FunctionResult, EnvError> {
        self.step += 1;
        let call = FunctionCall::from_tool_call(call)?;
        self.execute(&call)
    }

    pub fn execute(&mut self, call: &FunctionCall) -> Result<FunctionResult, EnvError> {
        let payload = match &call.params {
            FunctionParams::Query(q) => Payload::Products {
                items: self.world.search_product_by_query(q)?,
            },
            FunctionParams::History(h) => Payload::Products {
                items: self.world.get_recommendations_by_history(h)?,
            },
            FunctionParams::ReviewText(text) => {
                if text.trim().is_empty() {
                    return Err(EnvError::malformed(FunctionKind::AddProductReview, "review text is empty"));
                }
                self.posted_reviews.push(PostedReview {
                    user_id: self.user_id.clone(),
                    review_text: text.clone(),
                    step: self.step,
                });
                Payload::ReviewPosted {
                    review_index: self.posted_reviews.len() - 1,
                }
            }
            FunctionParams::Message(m) => Payload::Message { text: m.clone() },
            FunctionParams::None => Payload::Terminated,
        };
        Ok(FunctionResult {
            kind: call.kind,
            payload,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_fixture;

    fn env() -> EnvState {
        let bundle = generate_fixture(7, 10, 50).unwrap();
        let model = train_cooc(training_sequences(&bundle.users), &bundle.catalog);
        let world = World::build(bundle.catalog, Box::new(model)).unwrap();
        EnvState::new(Arc::new(world), "U1")
    }

    #[test]
    fn search_returns_ten() {
        let mut env = env();
        let res = env.dispatch(&ToolCall::search("wireless headphones")).unwrap();
        let ids = res.ranked_ids().unwrap();
        assert_eq!(ids.len(), RESULT_LIST_LEN);
        let ranks: Vec<_> = match &res.payload {
            Payload::Products { items } => items.iter().map(|r| r.rank).collect(),
            _ => unreachable!(),
        };
        assert_eq!(ranks, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn stop_terminates() {
        let res = env().dispatch(&ToolCall::stop()).unwrap();
        assert_eq!(res.payload, Payload::Terminated);
    }

    #[test]
    fn list_query_is_malformed() {
        let call = ToolCall::new(FunctionKind::SearchProductByQuery, json!({"query": ["a", "b"]}));
        assert!(matches!(env().dispatch(&call), Err(EnvError::MalformedParameters { .. })));
    }

    #[test]
    fn punctuation_query_is_malformed() {
        assert!(matches!(env().dispatch(&ToolCall::search("!!!")), Err(EnvError::MalformedParameters { .. })));
    }

    #[test]
    fn unknown_function() {
        let call = ToolCall {
            name: "buy_now".into(),
            arguments: json!({}),
        };
        assert_eq!(env().dispatch(&call), Err(EnvError::UnknownFunction("buy_now".into())));
    }

    #[test]
    fn extra_arguments_rejected() {
        let call = ToolCall::new(FunctionKind::Stop, json!({"why": "done"}));
        assert!(matches!(env().dispatch(&call), Err(EnvError::MalformedParameters { .. })));
    }

    #[test]
    fn reviews_append_in_order() {
        let mut env = env();
        env.dispatch(&ToolCall::review("Great blender.")).unwrap();
        env.dispatch(&ToolCall::review("Second thoughts.")).unwrap();
        let texts: Vec<_> = env.posted_reviews().iter().map(|r| r.review_text.as_str()).collect();
        assert_eq!(texts, ["Great blender.", "Second thoughts."]);
        assert!(matches!(env.dispatch(&ToolCall::review("")), Err(EnvError::MalformedParameters { .. })));
        assert_eq!(env.posted_reviews().len(), 2);
    }

    #[test]
    fn respond_is_pure() {
        let mut env = env();
        let res = env.dispatch(&ToolCall::respond("Which brand do you prefer?")).unwrap();
        assert_eq!(res.payload, Payload::Message { text: "Which brand do you prefer?".into() });
        let res = env.dispatch(&ToolCall::respond("")).unwrap();
        assert_eq!(res.payload, Payload::Message { text: String::new() });
        assert!(env.posted_reviews().is_empty());
    }

    #[test]
    fn recommendation_unknown_only_is_malformed() {
        assert!(matches!(
            env().dispatch(&ToolCall::recommend(["nope"])),
            Err(EnvError::MalformedParameters { .. })
        ));
        assert!(matches!(
            env().dispatch(&ToolCall::recommend(Vec::<String>::new())),
            Err(EnvError::MalformedParameters { .. })
        ));
    }

    #[test]
    fn dispatch_is_deterministic() {
        let call = ToolCall::search("organic coffee beans");
        assert_eq!(env().dispatch(&call).unwrap(), env().dispatch(&call).unwrap());
    }

    #[test]
    fn validated_call_round_trips() {
        for call in [
            ToolCall::search("q"),
            ToolCall::recommend(["a", "b"]),
            ToolCall::review("r"),
            ToolCall::respond("m"),
            ToolCall::stop(),
        ] {
            assert_eq!(FunctionCall::from_tool_call(&call).unwrap().to_tool_call(), call);
        }
    }
}
