//! Acceptance suite. Each criterion is checked against an oracle written
//! here, independently of the code under test, and reported as one line.
//! Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use approx::relative_eq;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shopbench_core::agent::{PromptVariant, ScriptBook, Track};
use shopbench_core::align::{
    build_alignment_data, dpo_grad, dpo_loss, export_alignment_datasets, oracle_candidate_book, read_preferences, read_sft,
    score_parameters, AlignConfig, DpoPoint, TitleQueryPolicy,
};
use shopbench_core::corpus::{generate_fixture, generate_fixture_split, BehaviorRecord, DatasetBundle, GroundTruth, Product, Split};
use shopbench_core::eval::{
    aggregate, build_match_trials, build_rank_trials, oracle_script_book, profile_behavior_match_task, profile_product_rank_task,
    result_accuracy, run_episodes, script_book_from_episodes, CannedSimulator, EpisodeRecord, HeuristicPolicy, MultiTurnConfig,
    OracleChooser, OracleRanker, Outcome, RandomChooser, RunSpec, Termination, MATCH_NEGATIVES, RANK_NEGATIVES, RANK_POSITIVES,
};
use shopbench_core::jsonl::to_lines;
use shopbench_core::memory::{build_memory_bank, retrieve_task_memory, FeatureField, MemoryPlanner, MemoryStrategy, RetrievalConfig};
use shopbench_core::retrieval::{Bm25Index, Bm25Params, EmbeddingProvider, HashedEmbedder};
use shopbench_core::webenv::{train_cooc, training_sequences, FunctionKind, Recommender, ToolCall, World};
use shopbench_core::TaskKind;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn world_for(bundle: &DatasetBundle) -> Arc<World> {
    let model = train_cooc(training_sequences(&bundle.users), &bundle.catalog);
    Arc::new(World::build(bundle.catalog.clone(), Box::new(model)).unwrap())
}

fn planner(bundle: &DatasetBundle, strategy: MemoryStrategy, retrieval: RetrievalConfig) -> MemoryPlanner {
    MemoryPlanner::new(
        &bundle.users,
        &bundle.catalog,
        Arc::new(HashedEmbedder::default()),
        strategy,
        retrieval,
        retrieval.k,
    )
    .unwrap()
}

fn spec(track: Track, seed: u64, jobs: usize, max_steps: usize) -> RunSpec {
    RunSpec {
        track,
        variant: PromptVariant::Plain,
        multi: MultiTurnConfig {
            max_steps,
            ..Default::default()
        },
        seed,
        jobs,
    }
}

// 1 -------------------------------------------------------------------------

fn rank_metric() -> Check {
    let ids: Vec<String> = (1..=12).map(|i| format!("p{i:02}")).collect();
    let expected = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0, 0.0];
    let e = HashedEmbedder::default();
    for (r, want) in expected.iter().enumerate() {
        let truth = GroundTruth::TargetProduct(ids[r].clone());
        let got = result_accuracy(TaskKind::Search, Some(Outcome::Ranked(&ids)), &truth, &e).map_err(|e| e.to_string())?;
        ensure!(got == *want, "rank {} scored {got}, expected {want}", r + 1);
    }
    Ok("ranks 1..12 exact".into())
}

// 2 -------------------------------------------------------------------------

fn oracle_loss(p: &DpoPoint) -> f64 {
    let z = p.beta * ((p.policy_best - p.ref_best) - (p.policy_worst - p.ref_worst));
    // -ln(sigmoid(z)); ln_1p keeps precision when exp(-z) is tiny.
    (-z).exp().ln_1p()
}

fn dpo_identities() -> Check {
    for beta in [0.1, 1.0, 10.0] {
        let p = DpoPoint {
            policy_best: -1.3,
            policy_worst: -2.0,
            ref_best: -1.3,
            ref_worst: -2.0,
            beta,
        };
        let l = dpo_loss(&p).map_err(|e| e.to_string())?;
        ensure!((l - std::f64::consts::LN_2).abs() <= 1e-12, "beta {beta}: zero-margin loss {l}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = DpoPoint {
            policy_best: rng.gen_range(-10.0..0.0),
            policy_worst: rng.gen_range(-10.0..0.0),
            ref_best: rng.gen_range(-10.0..0.0),
            ref_worst: rng.gen_range(-10.0..0.0),
            beta: rng.gen_range(0.1..=10.0),
        };
        let (gb, gw) = dpo_grad(&p).map_err(|e| e.to_string())?;
        let shifted = |db: f64, dw: f64| {
            oracle_loss(&DpoPoint {
                policy_best: p.policy_best + db,
                policy_worst: p.policy_worst + dw,
                ..p
            })
        };
        let fb = (shifted(h, 0.0) - shifted(-h, 0.0)) / (2.0 * h);
        let fw = (shifted(0.0, h) - shifted(0.0, -h)) / (2.0 * h);
        for (g, f) in [(gb, fb), (gw, fw)] {
            ensure!(relative_eq!(g, f, max_relative = 1e-5), "grad {g} vs finite difference {f} at {p:?}");
            worst = worst.max((g - f).abs() / g.abs().max(f.abs()));
        }
    }
    Ok(format!("ln2 at 3 betas, 1000 points, worst rel err {worst:.2e}"))
}

// 3 -------------------------------------------------------------------------

fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(cur.to_lowercase());
            cur.clear();
        }
    }
    if !cur.is_empty() {
        out.push(cur.to_lowercase());
    }
    out
}

/// Exhaustive Okapi BM25 (k1 0.9, b 0.4) over raw documents.
fn brute_bm25(docs: &[(String, String)], query: &str, k: usize) -> Vec<(String, f64)> {
    let (k1, b) = (0.9, 0.4);
    let toks: Vec<Vec<String>> = docs.iter().map(|(_, t)| oracle_tokens(t)).collect();
    let n = docs.len() as f64;
    let avg = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let q = oracle_tokens(query);
    let mut scored: Vec<(String, f64)> = docs
        .iter()
        .zip(&toks)
        .map(|((id, _), dt)| {
            let mut s = 0.0;
            for term in &q {
                let tf = dt.iter().filter(|t| *t == term).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = toks.iter().filter(|d| d.contains(term)).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dt.len() as f64 / avg));
            }
            (id.clone(), s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn retrieval_oracle() -> Check {
    const VOCAB: [&str; 24] = [
        "tea", "kettle", "steel", "black", "green", "usb", "cable", "lamp", "desk", "oak", "soft", "cotton", "mug", "red",
        "blue", "pack", "mini", "pro", "max", "glass", "bamboo", "travel", "hiking", "boots",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let n = rng.gen_range(1..=100);
        let docs: Vec<(String, String)> = (0..n)
            .map(|i| {
                let len = rng.gen_range(1..15);
                let words: Vec<&str> = (0..len).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
                (format!("D{:03}-{}", rng.gen_range(0..1000), i), words.join(if i % 3 == 0 { ", " } else { " " }))
            })
            .collect();
        let index = Bm25Index::from_documents(docs.iter().cloned(), Bm25Params::default()).map_err(|e| e.to_string())?;
        let qlen = rng.gen_range(1..5);
        let query: Vec<&str> = (0..qlen).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
        let query = query.join(" ");
        let k = rng.gen_range(1..=12);
        let got = index.query_top_k(&query, k);
        let want = brute_bm25(&docs, &query, k);
        ensure!(got.len() == want.len(), "case {case}: {} results, expected {}", got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            ensure!(g.0 == w.0, "case {case} query {query:?}: id {} vs {}", g.0, w.0);
            ensure!((g.1 - w.1).abs() <= 1e-9, "case {case}: score {} vs {}", g.1, w.1);
        }
    }
    Ok("200 corpora match exhaustive ranking".into())
}

// 4 -------------------------------------------------------------------------

fn expected_fields(kind: FunctionKind) -> Vec<&'static str> {
    match kind {
        FunctionKind::SearchProductByQuery => vec!["title", "category", "price", "store"],
        FunctionKind::GetRecommendationsByHistory => vec!["title", "category", "parent_asin"],
        FunctionKind::AddProductReview => vec!["rating", "review"],
        _ => vec!["title", "category", "price", "store", "parent_asin", "rating", "review_title", "review"],
    }
}

fn field_value(entry_product: &Product, b: &BehaviorRecord, label: &str) -> String {
    match label {
        "title" => entry_product.title.clone(),
        "category" => entry_product.category.clone(),
        "price" => entry_product.price.map_or_else(|| "unknown".into(), |p| format!("{p:.2}")),
        "store" => entry_product.store.clone(),
        "parent_asin" => entry_product.product_id.clone(),
        "rating" => format!("{}", b.rating),
        "review_title" => b.review_title.clone(),
        "review" => b.review_text.clone(),
        _ => unreachable!(),
    }
}

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn memory_oracle() -> Check {
    let e = HashedEmbedder::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let kinds = FunctionKind::ALL;
    for case in 0..200u64 {
        let bundle = generate_fixture(case, 2, rng.gen_range(10..40)).map_err(|e| e.to_string())?;
        let user = &bundle.users[rng.gen_range(0..bundle.users.len())];
        let catalog: HashMap<&str, &Product> = bundle.catalog.iter().map(|p| (p.product_id.as_str(), p)).collect();
        let bank = build_memory_bank(user, &bundle.catalog, &e).map_err(|e| e.to_string())?;
        let words: Vec<String> = bundle.catalog.iter().flat_map(|p| oracle_tokens(&p.title)).collect();
        let instruction: Vec<&str> = (0..rng.gen_range(2..9)).map(|_| words.choose(&mut rng).unwrap().as_str()).collect();
        let instruction = instruction.join(" ");
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let config = RetrievalConfig {
            k: rng.gen_range(1..30),
            token_budget: *[10, 25, 60, 256, 768].choose(&mut rng).unwrap(),
        };
        let got = retrieve_task_memory(&bank, &instruction, kind, config, &e).map_err(|e| e.to_string())?;

        // Oracle: score every history behavior, sort, cut at K, then keep the
        // longest prefix whose rendered token count fits the budget.
        let q = e.embed(&instruction).unwrap().0;
        let mut rows: Vec<(usize, f64, &BehaviorRecord)> = user
            .history
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let p = catalog[b.product_id.as_str()];
                let all: Vec<String> = expected_fields(FunctionKind::Stop)
                    .iter()
                    .map(|l| format!("{l}: {}", field_value(p, b, l)))
                    .collect();
                (i, oracle_cosine(&q, &e.embed(&all.join("; ")).unwrap().0), b)
            })
            .collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.timestamp.cmp(&a.2.timestamp)).then(b.0.cmp(&a.0)));
        let mut want = Vec::new();
        let mut used = 0;
        for (_, sim, b) in rows.into_iter().take(config.k) {
            let p = catalog[b.product_id.as_str()];
            let rendered: Vec<String> = expected_fields(kind)
                .iter()
                .map(|l| format!("{l}: {}", field_value(p, b, l)))
                .collect();
            let cost = rendered.join("; ").split_whitespace().count();
            if used + cost > config.token_budget {
                break;
            }
            used += cost;
            want.push((b.timestamp, sim, rendered.join("; ")));
        }
        ensure!(got.items.len() == want.len(), "case {case}: {} items, expected {}", got.items.len(), want.len());
        for (g, w) in got.items.iter().zip(&want) {
            ensure!(g.timestamp == w.0, "case {case}: entry order differs");
            ensure!((g.similarity - w.1).abs() <= 1e-12, "case {case}: similarity {} vs {}", g.similarity, w.1);
            ensure!(g.features.render() == w.2, "case {case}: features {:?} vs {:?}", g.features.render(), w.2);
            let labels: Vec<&str> = g.features.fields().iter().map(|f| f.label()).collect();
            ensure!(labels == expected_fields(kind), "case {case}: fields {labels:?} for {kind}");
        }
    }
    // Field sets on their own, for every function.
    for kind in FunctionKind::ALL {
        let labels: Vec<&str> = FeatureField::for_function(kind).iter().map(|f| f.label()).collect();
        ensure!(labels == expected_fields(kind), "{kind}: fields {labels:?}");
    }
    Ok("200 cases match brute-force selection; per-function field sets exact".into())
}

// 5 -------------------------------------------------------------------------

fn product(id: &str) -> Product {
    Product {
        product_id: id.into(),
        title: format!("item {id}"),
        category: "Misc".into(),
        price: Some(1.0),
        store: "S".into(),
        average_rating: None,
        rating_count: 0,
        features: vec![],
        description: String::new(),
    }
}

fn behaviors(ids: &[&str]) -> Vec<BehaviorRecord> {
    ids.iter()
        .enumerate()
        .map(|(t, id)| BehaviorRecord {
            timestamp: t as i64,
            product_id: id.to_string(),
            rating: 5.0,
            review_title: String::new(),
            review_text: String::new(),
        })
        .collect()
}

fn recommender_oracle() -> Check {
    let seqs = [
        behaviors(&["p1", "p2", "p3", "p1", "p2", "p4", "p5"]),
        behaviors(&["p2", "p3", "p1", "p2", "p3", "p6"]),
        behaviors(&["p5", "p4", "p1", "p2", "p3", "p7", "p1"]),
    ];
    ensure!(seqs.iter().map(Vec::len).sum::<usize>() == 20, "fixture must hold 20 interactions");
    let catalog: Vec<Product> = (1..=9).map(|i| product(&format!("p{i}"))).collect();
    let model = train_cooc(&seqs, &catalog);
    // Counted by hand from the three sequences above.
    let pairs: BTreeMap<(&str, &str), u64> = [
        (("p1", "p2"), 4),
        (("p2", "p3"), 4),
        (("p3", "p1"), 2),
        (("p2", "p4"), 1),
        (("p4", "p5"), 1),
        (("p3", "p6"), 1),
        (("p5", "p4"), 1),
        (("p4", "p1"), 1),
        (("p3", "p7"), 1),
        (("p7", "p1"), 1),
    ]
    .into();
    for a in catalog.iter().map(|p| p.product_id.as_str()) {
        for b in catalog.iter().map(|p| p.product_id.as_str()) {
            let want = pairs.get(&(a, b)).copied().unwrap_or(0);
            ensure!(model.transition(a, b) == want, "{a}->{b}: {} vs {want}", model.transition(a, b));
        }
    }
    // Hand-ranked: transition count, then popularity, then id.
    let got = model.recommend(&["p3".into()], 10);
    let want = [("p1", 2.0), ("p6", 1.0), ("p7", 1.0), ("p2", 0.0), ("p4", 0.0), ("p5", 0.0)];
    ensure!(
        got.iter().map(|(i, s)| (i.as_str(), *s)).collect::<Vec<_>>() == want,
        "recommend([p3]) = {got:?}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ids: Vec<String> = catalog.iter().map(|p| p.product_id.clone()).collect();
    for _ in 0..500 {
        let len = rng.gen_range(1..6);
        let history: Vec<String> = (0..len).map(|_| ids.choose(&mut rng).unwrap().clone()).collect();
        for (id, _) in model.recommend(&history, 10) {
            ensure!(!history.contains(&id), "history item {id} recommended for {history:?}");
        }
    }
    Ok("81 pair counts and ranking match hand counts; no history leakage in 500 draws".into())
}

// 6 -------------------------------------------------------------------------

/// Best one-item-history rank score for `target`, recomputed from the raw
/// training sequences.
fn brute_best_recommendation(bundle: &DatasetBundle, target: &str) -> f64 {
    let seqs: Vec<Vec<&str>> = bundle
        .users
        .iter()
        .map(|u| u.history.iter().chain(&u.train).map(|b| b.product_id.as_str()).collect())
        .collect();
    let mut count: HashMap<(&str, &str), u64> = HashMap::new();
    let mut pop: HashMap<&str, u64> = HashMap::new();
    for s in &seqs {
        for id in s {
            *pop.entry(id).or_default() += 1;
        }
        for w in s.windows(2) {
            *count.entry((w[0], w[1])).or_default() += 1;
        }
    }
    let mut best = 0.0f64;
    for x in bundle.catalog.iter().map(|p| p.product_id.as_str()) {
        let mut cands: Vec<&str> = pop.keys().copied().filter(|y| *y != x).collect();
        cands.sort_by(|a, b| {
            let ca = count.get(&(x, *a)).copied().unwrap_or(0);
            let cb = count.get(&(x, *b)).copied().unwrap_or(0);
            cb.cmp(&ca).then(pop[b].cmp(&pop[a])).then(a.cmp(b))
        });
        if let Some(r) = cands.iter().take(10).position(|y| *y == target) {
            best = best.max((10 - r) as f64 / 10.0);
        }
    }
    best
}

fn oracle_agent() -> Check {
    let bundle = generate_fixture(7, 10, 50).map_err(|e| e.to_string())?;
    ensure!(bundle.instructions.len() >= 30, "only {} instructions", bundle.instructions.len());
    let world = world_for(&bundle);
    let plan = planner(&bundle, MemoryStrategy::TaskSpecific, RetrievalConfig::single_turn());
    let book = oracle_script_book(&bundle.instructions, &world, Track::Single);
    let run = |jobs| run_episodes(&bundle.instructions, world.clone(), &plan, &book, None, &spec(Track::Single, 7, jobs, 10));
    let a = run(1).map_err(|e| e.to_string())?;
    let b = run(4).map_err(|e| e.to_string())?;
    ensure!(
        to_lines(&a).unwrap() == to_lines(&b).unwrap(),
        "episode bytes differ between runs"
    );
    let mut rec_sum = 0.0;
    for (ep, instr) in a.iter().zip(&bundle.instructions) {
        ensure!(!ep.is_failed(), "{} failed: {:?}", ep.instruction_id, ep.failure);
        ensure!(ep.function_acc == 1.0, "{}: function accuracy {}", ep.instruction_id, ep.function_acc);
        match instr.task_kind {
            TaskKind::Search | TaskKind::Review => {
                ensure!(ep.result_acc == 1.0, "{}: result accuracy {}", ep.instruction_id, ep.result_acc)
            }
            TaskKind::Recommendation => {
                let best = brute_best_recommendation(&bundle, instr.target_product().unwrap());
                ensure!(ep.result_acc == best, "{}: {} vs best achievable {best}", ep.instruction_id, ep.result_acc);
                rec_sum += best;
            }
        }
    }
    let report = aggregate(&a).map_err(|e| e.to_string())?;
    let rec = report.per_kind.iter().find(|r| r.task_kind == TaskKind::Recommendation).unwrap();
    Ok(format!(
        "{} episodes; search/review 1.0; recommendation {:.2} = best achievable {:.2}; bytes identical",
        a.len(),
        rec.metrics.result_acc,
        rec_sum / rec.metrics.episodes as f64
    ))
}

// 7 -------------------------------------------------------------------------

fn multi_turn_contract() -> Check {
    const MAX_STEPS: usize = 5;
    let bundle = generate_fixture(11, 10, 50).map_err(|e| e.to_string())?;
    let world = world_for(&bundle);
    let plan = planner(&bundle, MemoryStrategy::None, RetrievalConfig::multi_turn());
    let oracle = oracle_script_book(&bundle.instructions, &world, Track::Single);
    let mut book = ScriptBook::default();
    let mut expected_steps = BTreeMap::new();
    let stop = ToolCall::stop().to_json_text();
    let ask = ToolCall::respond("Any preferred brand?").to_json_text();
    for (i, instr) in bundle.instructions.iter().enumerate() {
        let call = oracle.get(&instr.instruction_id).unwrap()[0].clone();
        let (script, steps) = match i % 4 {
            0 => (vec![call, stop.clone()], 2),
            1 => (vec![ask.clone(), call, stop.clone()], 3),
            2 => (vec![ask.clone(); MAX_STEPS], MAX_STEPS),
            _ => (vec![stop.clone()], 1),
        };
        book.insert(instr.instruction_id.clone(), script);
        expected_steps.insert(instr.instruction_id.clone(), (instr.task_kind, steps, i % 4 == 2));
    }
    let sim = CannedSimulator("No preference.".into());
    let eps = run_episodes(&bundle.instructions, world, &plan, &book, Some(&sim), &spec(Track::Multi, 1, 2, MAX_STEPS))
        .map_err(|e| e.to_string())?;
    for ep in &eps {
        let (_, steps, respond_only) = expected_steps[&ep.instruction_id];
        ensure!((1..=MAX_STEPS).contains(&ep.steps), "{}: steps {}", ep.instruction_id, ep.steps);
        ensure!(ep.steps == steps, "{}: steps {} expected {steps}", ep.instruction_id, ep.steps);
        if respond_only {
            ensure!(
                ep.termination == Termination::MaxSteps && ep.function_acc == 0.0,
                "{}: respond-only ended with {:?}",
                ep.instruction_id,
                ep.termination
            );
        }
    }
    let report = aggregate(&eps).map_err(|e| e.to_string())?;
    let total: usize = expected_steps.values().map(|v| v.1).sum();
    let hand = total as f64 / expected_steps.len() as f64;
    ensure!((report.overall.steps - hand).abs() < 1e-12, "overall steps {} vs {hand}", report.overall.steps);
    for row in &report.per_kind {
        let of_kind: Vec<usize> = expected_steps.values().filter(|v| v.0 == row.task_kind).map(|v| v.1).collect();
        let hand = of_kind.iter().sum::<usize>() as f64 / of_kind.len() as f64;
        ensure!((row.metrics.steps - hand).abs() < 1e-12, "{:?} steps {} vs {hand}", row.task_kind, row.metrics.steps);
    }
    Ok(format!("{} episodes within budget; mean steps {hand:.4} matches hand count", eps.len()))
}

// 8 -------------------------------------------------------------------------

fn profile_consistency() -> Check {
    let bundle = generate_fixture(13, 10, 50).map_err(|e| e.to_string())?;
    let trials = build_match_trials(&bundle.users, 1000, MATCH_NEGATIVES, 13).map_err(|e| e.to_string())?;
    ensure!(trials.iter().all(|t| t.candidates.len() == 5), "trials must have 5 candidates");
    let oracle = profile_behavior_match_task(&trials, &mut OracleChooser).map_err(|e| e.to_string())?;
    ensure!(oracle.accuracy == 1.0, "oracle chooser accuracy {}", oracle.accuracy);
    let random = profile_behavior_match_task(&trials, &mut RandomChooser::new(13)).map_err(|e| e.to_string())?;
    ensure!((0.15..=0.25).contains(&random.accuracy), "random chooser accuracy {}", random.accuracy);
    let ranks = build_rank_trials(&bundle.users, &bundle.catalog, RANK_POSITIVES, RANK_NEGATIVES, 13).map_err(|e| e.to_string())?;
    ensure!(
        ranks.iter().all(|t| t.items.len() == 10 && t.positives.len() == 3),
        "rank trials must be 3 + 7"
    );
    let r = profile_product_rank_task(&ranks, &mut OracleRanker).map_err(|e| e.to_string())?;
    ensure!((r.ndcg_at_5, r.recall_at_5) == (1.0, 1.0), "oracle ranker {r:?}");
    Ok(format!(
        "oracle top-1 1.0, NDCG@5 1.0, Recall@5 1.0; random top-1 {:.3} over 1000 trials",
        random.accuracy
    ))
}

// 9 -------------------------------------------------------------------------

fn alignment_pipeline() -> Check {
    let bundle = generate_fixture_split(17, 10, 50, Split::Train).map_err(|e| e.to_string())?;
    let world = world_for(&bundle);
    let plan = planner(&bundle, MemoryStrategy::TaskSpecific, RetrievalConfig::single_turn());
    let e = HashedEmbedder::default();
    let config = AlignConfig::default();
    let book = oracle_candidate_book(&bundle.instructions, &world, config.candidates);
    let (sft, prefs) =
        build_alignment_data(&bundle.instructions, &world, &plan, &book, &mut TitleQueryPolicy, &config).map_err(|e| e.to_string())?;
    ensure!(!prefs.is_empty(), "no preference pairs produced");
    let by_id: HashMap<&str, _> = bundle.instructions.iter().map(|i| (i.instruction_id.as_str(), i)).collect();
    for p in &prefs {
        let instr = by_id[p.instruction_id.as_str()];
        let best = score_parameters(&p.p_best, instr, &world, &e).map_err(|e| e.to_string())?;
        let worst = score_parameters(&p.p_worst, instr, &world, &e).map_err(|e| e.to_string())?;
        ensure!(best > worst, "{}: rescored {best} <= {worst}", p.instruction_id);
        ensure!(best == p.score_best && worst == p.score_worst, "{}: rescoring changed scores", p.instruction_id);
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = export_alignment_datasets(dir.path(), &sft, &prefs).map_err(|e| e.to_string())?;
    ensure!(read_sft(&files.sft).map_err(|e| e.to_string())? == sft, "SFT round trip differs");
    ensure!(read_preferences(&files.preferences).map_err(|e| e.to_string())? == prefs, "preference round trip differs");

    // Every candidate unusable, so every score is 0 and no pair exists.
    let mut flat = ScriptBook::default();
    for i in &bundle.instructions {
        flat.insert(i.instruction_id.clone(), ["no idea", "still no idea"]);
    }
    let flat_config = AlignConfig {
        candidates: 2,
        ..config
    };
    let (_, none) = build_alignment_data(&bundle.instructions, &world, &plan, &flat, &mut TitleQueryPolicy, &flat_config)
        .map_err(|e| e.to_string())?;
    ensure!(none.is_empty(), "zero-margin set produced {} pairs", none.len());
    let dir2 = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files2 = export_alignment_datasets(dir2.path(), &sft, &none).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&files2.preferences).map_err(|e| e.to_string())?;
    ensure!(text.lines().count() == 0, "zero-margin export wrote {} lines", text.lines().count());
    Ok(format!(
        "{} SFT, {} pairs rescored strictly ordered; zero-margin set exports 0; round trip equal",
        sft.len(),
        prefs.len()
    ))
}

// 10 ------------------------------------------------------------------------

fn recommendation_function_acc(episodes: &[EpisodeRecord]) -> f64 {
    let rec: Vec<f64> = episodes
        .iter()
        .filter(|e| e.task_kind == TaskKind::Recommendation)
        .map(|e| e.function_acc)
        .collect();
    rec.iter().sum::<f64>() / rec.len() as f64
}

fn memory_direction() -> Check {
    let bundle = generate_fixture(7, 10, 50).map_err(|e| e.to_string())?;
    let world = world_for(&bundle);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut accs = Vec::new();
    for (name, strategy) in [("task-memory", MemoryStrategy::TaskSpecific), ("no-memory", MemoryStrategy::None)] {
        let plan = planner(&bundle, strategy, RetrievalConfig::single_turn());
        let s = spec(Track::Single, 7, 2, 10);
        // Record transcripts, then evaluate the replayed scripts.
        let live = run_episodes(&bundle.instructions, world.clone(), &plan, &HeuristicPolicy, None, &s).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{name}.jsonl"));
        script_book_from_episodes(&live).save(&path).map_err(|e| e.to_string())?;
        let book = ScriptBook::load(&path).map_err(|e| e.to_string())?;
        let replay = run_episodes(&bundle.instructions, world.clone(), &plan, &book, None, &s).map_err(|e| e.to_string())?;
        ensure!(replay == live, "{name}: replay differs from recorded run");
        accs.push(recommendation_function_acc(&replay));
    }
    ensure!(accs[0] >= accs[1], "task-memory {} < no-memory {}", accs[0], accs[1]);
    Ok(format!("recommendation F.Acc task-memory {:.2} >= no-memory {:.2}", accs[0], accs[1]))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 10] = [
        ("result accuracy over ranks 1..12", rank_metric, Duration::from_millis(1)),
        ("DPO identities and gradient check", dpo_identities, Duration::from_secs(1)),
        ("BM25 top-k equals exhaustive ranking", retrieval_oracle, Duration::from_secs(10)),
        ("task-memory selection equals brute force", memory_oracle, Duration::from_secs(10)),
        ("co-occurrence counts and history exclusion", recommender_oracle, Duration::from_secs(1)),
        ("oracle agent end to end on fixture", oracle_agent, Duration::from_secs(30)),
        ("multi-turn step contract", multi_turn_contract, Duration::from_secs(10)),
        ("profile-consistency harness", profile_consistency, Duration::from_secs(10)),
        ("alignment pipeline", alignment_pipeline, Duration::from_secs(10)),
        ("memory-aware vs no-memory direction", memory_direction, Duration::from_secs(10)),
    ];
    let mut failures = 0;
    for (n, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let verdict = match &outcome {
            Ok(_) if elapsed <= *limit => "PASS",
            _ => "FAIL",
        };
        let detail = match outcome {
            Ok(d) if elapsed <= *limit => d,
            Ok(d) => format!("{d}; too slow, limit {limit:?}"),
            Err(e) => e,
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!("{verdict} [{:>2}] {name} ({elapsed:.2?}): {detail}", n + 1);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
