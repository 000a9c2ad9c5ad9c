//! Parsing of model-written profile summaries and the inverse serializer.

use serde_json::{Deserializer, Map, Value};

use super::BenchgenError;
use crate::corpus::{TriLevel, UserProfile};

/// Canonical key, display key used in serialized profiles.
const KEYS: [(&str, &str); 11] = [
    ("gender", "Gender"),
    ("age", "Age"),
    ("occupation", "Occupation"),
    ("price_sensitivity", "Price Sensitivity"),
    ("shopping_interest", "Shopping Interest"),
    ("brand_preference", "Brand Preference"),
    ("diversity_preference", "Diversity Preference"),
    ("interaction_complexity", "Interaction Complexity"),
    ("tone_and_style", "Tone and Style"),
    ("item_reference", "Item Reference"),
    ("focus_aspects", "Focus Aspect"),
];

fn display_key(canonical: &str) -> &'static str {
    KEYS.iter().find(|(c, _)| *c == canonical).map(|(_, d)| *d).expect("known key")
}

/// Lowercase, runs of non-alphanumerics to `_`, then a few aliases.
fn canonical_key(raw: &str) -> String {
    let mut out = String::new();
    for part in raw.split(|c: char| !c.is_alphanumeric()).filter(|p| !p.is_empty()) {
        if !out.is_empty() {
            out.push('_');
        }
        out.push_str(&part.to_lowercase());
    }
    match out.as_str() {
        "age_bracket" | "age_group" => "age".into(),
        "diversity" => "diversity_preference".into(),
        "interaction" => "interaction_complexity".into(),
        "tone_style" | "tone" => "tone_and_style".into(),
        "focus_aspect" | "focus" => "focus_aspects".into(),
        "brand_preferences" => "brand_preference".into(),
        "shopping_interests" => "shopping_interest".into(),
        "item_references" => "item_reference".into(),
        _ => out,
    }
}

fn is_profile_key(k: &str) -> bool {
    KEYS.iter().any(|(c, _)| *c == k)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Reads the first JSON object in `text` into a profile.
///
/// Keys may be display names or snake case; one level of nested grouping
/// objects is flattened. Tri-level values are case-folded and may carry a
/// `: description` suffix.
pub fn parse_profile_output(text: &str) -> Result<UserProfile, BenchgenError> {
    let start = text.find('{').ok_or(BenchgenError::ProfileSyntax {
        offset: text.len(),
        message: "no JSON object found".into(),
    })?;
    let body = &text[start..];
    let value = match Deserializer::from_str(body).into_iter::<Value>().next() {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            return Err(BenchgenError::ProfileSyntax {
                offset: start + byte_offset(body, e.line(), e.column()),
                message: e.to_string(),
            })
        }
        None => unreachable!("body starts with '{{'"),
    };
    let Value::Object(raw) = value else { unreachable!("value starting with '{{' is an object") };

    let mut fields = Map::new();
    for (k, v) in raw {
        let key = canonical_key(&k);
        match v {
            Value::Object(inner) if !is_profile_key(&key) => {
                for (ik, iv) in inner {
                    fields.entry(canonical_key(&ik)).or_insert(iv);
                }
            }
            v => {
                fields.insert(key, v);
            }
        }
    }

    let mut take = |key: &str| {
        fields.remove(key).ok_or_else(|| BenchgenError::MissingKey(display_key(key).to_string()))
    };
    Ok(UserProfile {
        gender: text_value(take("gender")?),
        age: text_value(take("age")?),
        occupation: text_value(take("occupation")?),
        price_sensitivity: level_value("price_sensitivity", take("price_sensitivity")?)?,
        diversity_preference: level_value("diversity_preference", take("diversity_preference")?)?,
        interaction_complexity: level_value("interaction_complexity", take("interaction_complexity")?)?,
        shopping_interest: text_value(take("shopping_interest")?),
        brand_preference: text_value(take("brand_preference")?),
        tone_and_style: text_value(take("tone_and_style")?),
        item_reference: text_value(take("item_reference")?),
        focus_aspects: list_value(take("focus_aspects")?),
    })
}

fn text_value(v: Value) -> String {
    match v {
        Value::String(s) => s,
        Value::Null => String::new(),
        Value::Array(items) => items.into_iter().map(text_value).collect::<Vec<_>>().join(", "),
        other => other.to_string(),
    }
}

fn level_value(key: &str, v: Value) -> Result<TriLevel, BenchgenError> {
    let raw = text_value(v);
    let head = raw.split(':').next().unwrap_or_default().trim().trim_matches(|c| c == '"' || c == '.');
    TriLevel::parse(head).ok_or_else(|| BenchgenError::OutOfVocabulary {
        key: display_key(key).to_string(),
        value: raw.clone(),
    })
}

fn list_value(v: Value) -> Vec<String> {
    match v {
        Value::Array(items) => items.into_iter().map(text_value).collect(),
        Value::Null => Vec::new(),
        other => text_value(other)
            .split([',', ';'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
    }
}

/// Display-key JSON object; [`parse_profile_output`] inverts it exactly.
pub fn profile_to_json(profile: &UserProfile) -> Value {
    let mut map = Map::new();
    let mut put = |key: &str, v: Value| {
        map.insert(display_key(key).to_string(), v);
    };
    put("gender", profile.gender.clone().into());
    put("age", profile.age.clone().into());
    put("occupation", profile.occupation.clone().into());
    put("price_sensitivity", profile.price_sensitivity.as_str().into());
    put("shopping_interest", profile.shopping_interest.clone().into());
    put("brand_preference", profile.brand_preference.clone().into());
    put("diversity_preference", profile.diversity_preference.as_str().into());
    put("interaction_complexity", profile.interaction_complexity.as_str().into());
    put("tone_and_style", profile.tone_and_style.clone().into());
    put("item_reference", profile.item_reference.clone().into());
    put("focus_aspects", profile.focus_aspects.clone().into());
    Value::Object(map)
}

pub fn serialize_profile(profile: &UserProfile) -> String {
    serde_json::to_string_pretty(&profile_to_json(profile)).expect("plain JSON")
}
