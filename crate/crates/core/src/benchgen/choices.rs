//! Option lists offered to the model when it summarizes a user profile.

use crate::corpus::TriLevel;

pub const GENDERS: [&str; 2] = ["Female", "Male"];

pub const AGES: [&str; 7] = ["Under 18", "18-24", "25-34", "35-44", "45-49", "50-55", "56+"];

pub const OCCUPATIONS: [&str; 21] = [
    "Academic/Educator",
    "Artist",
    "Clerical/admin",
    "College/grad student",
    "Customer service",
    "Doctor/health care",
    "Executive/managerial",
    "Farmer",
    "Homemaker",
    "K-12 student",
    "Lawyer",
    "Programmer",
    "Retired",
    "Sales/Marketing",
    "Scientist",
    "Self-employed",
    "Technician/Engineer",
    "Tradesman/Craftsman",
    "Unemployed",
    "Writer",
    "Other",
];

pub type LevelTable = [(TriLevel, &'static str); 3];

pub const PRICE_SENSITIVITY: LevelTable = [
    (TriLevel::High, "A Price-Conscious Shopper who is very sensitive to cost and seeks the best deals."),
    (TriLevel::Medium, "A Balanced Buyer who considers price but also values quality and features."),
    (TriLevel::Low, "A Value-Driven Consumer who prioritizes quality and features over price."),
];

pub const DIVERSITY: LevelTable = [
    (
        TriLevel::High,
        "A Highly Adventurous Explorer eager to discover diverse products across categories. They often seek recommendations, and purchase a wide variety of items with varying ratings, and the user's own ratings may often differ from the average. Their reviews are detailed and enthusiastic, reflecting their unique tastes and enjoyment of variety.",
    ),
    (
        TriLevel::Medium,
        "A Balanced Seeker who enjoys trying new products but also values familiarity. They appreciate targeted recommendations, purchase a moderate number of items with solid ratings and a reasonable number of ratings, and their reviews balance detailed feedback with concise, practical comments.",
    ),
    (
        TriLevel::Low,
        "A Meticulously Selective Buyer who sticks to tried-and-true products, showing little interest in new options. They purchase fewer items, favoring those with high ratings and a large number of ratings. Their own ratings are often very close to or slightly above the average, and their reviews are thoughtful and focused on familiar products.",
    ),
];

pub const INTERACTION: LevelTable = [
    (
        TriLevel::High,
        "A Thorough Conversationalist who enjoys detailed discussions, exploring all aspects of a product or service. They provide extensive reviews and value comprehensive support, engaging in multiple rounds of communication.",
    ),
    (
        TriLevel::Medium,
        "A Moderate Engager who balances simplicity with detail. They prefer clear communication but can engage in detailed exchanges when necessary. They provide reviews that are a mix of concise observations and some detailed insights, especially if they have strong feelings about a product.",
    ),
    (
        TriLevel::Low,
        "A Minimalist Interactor who values simplicity and efficiency. They prefer quick, straightforward interactions and leave brief, to-the-point reviews, focusing only on essential product aspects.",
    ),
];

pub const FOCUS_ASPECTS: [&str; 8] = [
    "Average Rating",
    "Number of Ratings",
    "Price",
    "Store",
    "Material",
    "Size",
    "Weight",
    "Brand",
];

pub fn describe(table: &LevelTable, level: TriLevel) -> &'static str {
    table
        .iter()
        .find(|(l, _)| *l == level)
        .map(|(_, d)| *d)
        .expect("tables cover every level")
}

/// `[A, B, C]`
pub(crate) fn bracket_list(items: &[&str]) -> String {
    format!("[{}]", items.join(", "))
}

/// `[A, B]` with quoted items.
pub(crate) fn quoted_list(items: &[&str]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("\"{s}\"")).collect();
    bracket_list(&quoted.iter().map(String::as_str).collect::<Vec<_>>())
}

/// `["High": "...", "Medium": "...", "Low": "..."]`
pub(crate) fn level_list(table: &LevelTable) -> String {
    let entries: Vec<String> = table
        .iter()
        .map(|(level, d)| {
            let name = level.as_str();
            let title = format!("{}{}", name[..1].to_ascii_uppercase(), &name[1..]);
            format!("\"{title}\": \"{d}\"")
        })
        .collect();
    format!("[{}]", entries.join(", "))
}
