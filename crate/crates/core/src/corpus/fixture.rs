//! Seeded synthetic catalog/users/instructions at desk scale.
//!
//! Output depends only on `(seed, n_users, n_products)`. Every collection is
//! built in a fixed order so serialized bytes are reproducible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    chronological_split, BehaviorRecord, CorpusError, DatasetBundle, GroundTruth, Instruction, Product, Split,
    TaskKind, TriLevel, UserProfile, UserRecord, DEFAULT_CATEGORIES, DEFAULT_HISTORY_FRACTION,
};

struct CategoryVocab {
    nouns: &'static [&'static str],
    adjectives: &'static [&'static str],
    features: &'static [&'static str],
    uses: &'static [&'static str],
}

const VOCAB: [CategoryVocab; 5] = [
    CategoryVocab {
        nouns: &["headphones", "charger", "keyboard", "webcam", "speaker", "router", "mouse", "monitor"],
        adjectives: &["wireless", "compact", "ergonomic", "portable", "rugged"],
        features: &["bluetooth pairing", "usb c port", "noise cancelling", "long battery life", "fast charging"],
        uses: &["my home office", "travel", "gaming sessions", "video calls"],
    },
    CategoryVocab {
        nouns: &["blender", "skillet", "kettle", "knife", "toaster", "cutting board", "mixer", "teapot"],
        adjectives: &["stainless", "nonstick", "cast iron", "bamboo", "ceramic"],
        features: &["dishwasher safe", "heat resistant handle", "easy to clean", "bpa free", "large capacity"],
        uses: &["weeknight dinners", "morning smoothies", "baking", "hosting friends"],
    },
    CategoryVocab {
        nouns: &["coffee beans", "green tea", "olive oil", "granola", "hot sauce", "honey", "pasta", "chocolate"],
        adjectives: &["organic", "roasted", "spicy", "raw", "artisan"],
        features: &["gluten free", "fair trade", "non gmo", "resealable bag", "small batch"],
        uses: &["breakfast", "snacking", "cooking", "gifting"],
    },
    CategoryVocab {
        nouns: &["sneakers", "jacket", "scarf", "watch", "backpack", "sweater", "boots", "necklace"],
        adjectives: &["waterproof", "lightweight", "wool", "leather", "slim fit"],
        features: &["breathable fabric", "adjustable strap", "machine washable", "true to size", "reinforced stitching"],
        uses: &["daily commuting", "hiking", "the office", "weekend trips"],
    },
    CategoryVocab {
        nouns: &["vitamins", "toothbrush", "hand soap", "thermometer", "first aid kit", "shampoo", "face masks", "detergent"],
        adjectives: &["unscented", "travel size", "refillable", "sensitive", "eco friendly"],
        features: &["dermatologist tested", "fragrance free", "rechargeable", "value pack", "plant based"],
        uses: &["the family", "sensitive skin", "daily routine", "the bathroom"],
    },
];

const BRANDS: [&str; 12] = [
    "Norvale", "Kestrel", "Amberly", "Quillon", "Tamsin", "Vireo", "Brackett", "Oakhurst", "Lumen", "Petrel",
    "Sorrel", "Wexford",
];

const STORES: [&str; 6] = [
    "Norvale Official", "Kestrel Goods", "Harbor Outlet", "Cedar Lane Shop", "Summit Supply", "Bluebird Market",
];

const GENDERS: [&str; 2] = ["Female", "Male"];
const AGES: [&str; 7] = ["Under 18", "18-24", "25-34", "35-44", "45-49", "50-55", "56+"];
const OCCUPATIONS: [&str; 8] = [
    "Programmer", "Homemaker", "Scientist", "Writer", "Retired", "Sales/Marketing", "Doctor/health care",
    "College/grad student",
];
const FOCUS: [&str; 8] = [
    "Average Rating", "Number of Ratings", "Price", "Store", "Material", "Size", "Weight", "Brand",
];
const TONES: [&str; 4] = [
    "enthusiastic and detailed",
    "brief and practical",
    "critical but fair",
    "warm and conversational",
];
const ITEM_REFS: [&str; 3] = [
    "often compares with past purchases",
    "mentions brands by name",
    "rarely references other products",
];
const SENTIMENT: [&str; 5] = [
    "Disappointing, it stopped working quickly",
    "Not great, several flaws",
    "Okay overall, does the job",
    "Really good, would buy again",
    "Excellent, exceeded my expectations",
];
const LEVELS: [TriLevel; 3] = [TriLevel::High, TriLevel::Medium, TriLevel::Low];

/// Catalog and users together with instructions for both splits.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureData {
    pub catalog: Vec<Product>,
    pub users: Vec<UserRecord>,
    pub train_instructions: Vec<Instruction>,
    pub test_instructions: Vec<Instruction>,
}

impl FixtureData {
    pub fn generate(seed: u64, n_users: usize, n_products: usize) -> Result<Self, CorpusError> {
        if n_products < 10 {
            return Err(CorpusError::TooFewProducts(n_products));
        }
        if n_users == 0 {
            return Err(CorpusError::NoUsers);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let catalog = make_catalog(&mut rng, n_products);
        let users = (0..n_users).map(|u| make_user(&mut rng, u, &catalog)).collect::<Result<Vec<_>, _>>()?;
        let train_instructions = make_instructions(&mut rng, &users, &catalog, Split::Train);
        let test_instructions = make_instructions(&mut rng, &users, &catalog, Split::Test);
        Ok(Self {
            catalog,
            users,
            train_instructions,
            test_instructions,
        })
    }

    pub fn bundle(&self, split: Split) -> DatasetBundle {
        DatasetBundle {
            catalog: self.catalog.clone(),
            users: self.users.clone(),
            instructions: match split {
                Split::Train => self.train_instructions.clone(),
                Split::Test => self.test_instructions.clone(),
            },
            split,
        }
    }
}

/// Test-split fixture bundle.
pub fn generate_fixture(seed: u64, n_users: usize, n_products: usize) -> Result<DatasetBundle, CorpusError> {
    generate_fixture_split(seed, n_users, n_products, Split::Test)
}

pub fn generate_fixture_split(
    seed: u64,
    n_users: usize,
    n_products: usize,
    split: Split,
) -> Result<DatasetBundle, CorpusError> {
    Ok(FixtureData::generate(seed, n_users, n_products)?.bundle(split))
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

fn make_catalog(rng: &mut ChaCha8Rng, n: usize) -> Vec<Product> {
    (0..n)
        .map(|i| {
            let cat_idx = i % DEFAULT_CATEGORIES.len();
            let vocab = &VOCAB[cat_idx];
            let brand = *pick(rng, &BRANDS);
            let noun = *pick(rng, vocab.nouns);
            let adjective = *pick(rng, vocab.adjectives);
            // Model codes embed the ordinal, so every title carries a unique term.
            let code = format!(
                "{}{}{:03}",
                (b'A' + rng.gen_range(0..26u8)) as char,
                (b'A' + rng.gen_range(0..26u8)) as char,
                i
            );
            let mut features: Vec<String> = vocab.features.iter().map(|s| s.to_string()).collect();
            features.shuffle(rng);
            features.truncate(rng.gen_range(2..=3));
            let price = if rng.gen_bool(0.1) {
                None
            } else {
                Some((rng.gen_range(399..=19999) as f64) / 100.0)
            };
            let rating_count = rng.gen_range(0..5000u64);
            let average_rating = if rating_count == 0 || rng.gen_bool(0.05) {
                None
            } else {
                Some((rng.gen_range(10..=50) as f64) / 10.0)
            };
            Product {
                product_id: format!("B0{:03}{:05X}", i, rng.gen_range(0..0xFFFFFu32)),
                title: format!("{brand} {adjective} {noun} {code}"),
                category: DEFAULT_CATEGORIES[cat_idx].to_string(),
                price,
                store: pick(rng, &STORES).to_string(),
                average_rating,
                rating_count,
                features,
                description: format!(
                    "A {adjective} {noun} from {brand}, great for {}.",
                    pick(rng, vocab.uses)
                ),
            }
        })
        .collect()
}

fn noun_of(product: &Product) -> &str {
    let cat_idx = DEFAULT_CATEGORIES.iter().position(|c| *c == product.category).unwrap_or(0);
    VOCAB[cat_idx]
        .nouns
        .iter()
        .find(|n| product.title.contains(*n))
        .copied()
        .unwrap_or("item")
}

fn make_user(rng: &mut ChaCha8Rng, ordinal: usize, catalog: &[Product]) -> Result<UserRecord, CorpusError> {
    let n_cat = DEFAULT_CATEGORIES.len();
    let fav_a = rng.gen_range(0..n_cat);
    let fav_b = (fav_a + rng.gen_range(1..n_cat)) % n_cat;
    let in_cat = |c: usize| -> Vec<usize> { (0..catalog.len()).filter(|i| i % n_cat == c).collect() };
    let pool_a = in_cat(fav_a);
    let pool_b = in_cat(fav_b);

    let n = rng.gen_range(10..=18);
    let mut ts: i64 = 1_600_000_000 + ordinal as i64 * 3_600 + rng.gen_range(0..86_400);
    let mut prev: Option<usize> = None;
    let mut behaviors = Vec::with_capacity(n);
    for _ in 0..n {
        // Half the time follow the catalog's "next in category" chain, which
        // gives the co-occurrence recommender repeatable transitions.
        let idx = match prev {
            Some(p) if rng.gen_bool(0.5) => (p + n_cat) % catalog.len(),
            _ => {
                if rng.gen_bool(0.8) {
                    *pick(rng, &pool_a)
                } else if rng.gen_bool(0.7) {
                    *pick(rng, &pool_b)
                } else {
                    rng.gen_range(0..catalog.len())
                }
            }
        };
        prev = Some(idx);
        let product = &catalog[idx];
        let rating = rng.gen_range(1..=5u8);
        let noun = noun_of(product);
        let feature = product.features.first().map(String::as_str).unwrap_or("quality");
        behaviors.push(BehaviorRecord {
            timestamp: ts,
            product_id: product.product_id.clone(),
            rating: rating as f64,
            review_title: format!("{} {noun}", SENTIMENT[(rating - 1) as usize].split(',').next().unwrap_or("")),
            review_text: format!(
                "{}. The {noun} has {feature} and the price felt {}.",
                SENTIMENT[(rating - 1) as usize],
                if rating >= 4 { "fair" } else { "high" }
            ),
        });
        ts += rng.gen_range(86_400..30 * 86_400);
    }
    let (history, train, test) = chronological_split(&behaviors, DEFAULT_HISTORY_FRACTION)?;

    let brands: Vec<&str> = {
        let mut b: Vec<&str> = behaviors
            .iter()
            .filter_map(|r| catalog.iter().find(|p| p.product_id == r.product_id))
            .map(|p| p.title.split(' ').next().unwrap_or(""))
            .collect();
        b.sort_unstable();
        b.dedup();
        b.truncate(3);
        b
    };
    let mut focus: Vec<String> = FOCUS.iter().map(|s| s.to_string()).collect();
    focus.shuffle(rng);
    focus.truncate(2);
    let profile = UserProfile {
        gender: pick(rng, &GENDERS).to_string(),
        age: pick(rng, &AGES).to_string(),
        occupation: pick(rng, &OCCUPATIONS).to_string(),
        price_sensitivity: *pick(rng, &LEVELS),
        diversity_preference: *pick(rng, &LEVELS),
        interaction_complexity: *pick(rng, &LEVELS),
        shopping_interest: format!("{}; {}", DEFAULT_CATEGORIES[fav_a], DEFAULT_CATEGORIES[fav_b]),
        brand_preference: brands.join(", "),
        tone_and_style: pick(rng, &TONES).to_string(),
        item_reference: pick(rng, &ITEM_REFS).to_string(),
        focus_aspects: focus,
    };
    Ok(UserRecord {
        user_id: format!("A{:03}{:06X}", ordinal, rng.gen_range(0..0xFFFFFFu32)),
        profile,
        history,
        train,
        test,
    })
}

fn make_instructions(rng: &mut ChaCha8Rng, users: &[UserRecord], catalog: &[Product], split: Split) -> Vec<Instruction> {
    let mut out = Vec::new();
    for user in users {
        let block = match split {
            Split::Train => &user.train,
            Split::Test => &user.test,
        };
        for (k, kind) in TaskKind::ALL.into_iter().enumerate() {
            let behavior = &block[k % block.len()];
            let product = catalog
                .iter()
                .find(|p| p.product_id == behavior.product_id)
                .expect("fixture behaviors reference fixture products");
            let noun = noun_of(product);
            let cat_idx = DEFAULT_CATEGORIES.iter().position(|c| *c == product.category).unwrap_or(0);
            let use_case = pick(rng, VOCAB[cat_idx].uses);
            let aspect = user.profile.focus_aspects.first().map(|s| s.to_lowercase()).unwrap_or_default();
            let (text, ground_truth) = match kind {
                TaskKind::Search => (
                    format!("I'm looking for a {noun} for {use_case}. I care about {aspect}, any good options?"),
                    GroundTruth::TargetProduct(product.product_id.clone()),
                ),
                TaskKind::Recommendation => (
                    format!(
                        "Can you recommend something new for me? Maybe along the lines of {} that fits my taste.",
                        product.category.to_lowercase()
                    ),
                    GroundTruth::TargetProduct(product.product_id.clone()),
                ),
                TaskKind::Review => (
                    format!(
                        "Please help me write a review for the {noun} I bought; I'd give it {} stars.",
                        behavior.rating
                    ),
                    GroundTruth::ReferenceReview(behavior.review_text.clone()),
                ),
            };
            out.push(Instruction {
                instruction_id: format!("{}-{}-{}", split.as_str(), user.user_id, kind.as_str()),
                user_id: user.user_id.clone(),
                task_kind: kind,
                text,
                ground_truth,
            });
        }
    }
    out
}
