//! `shopbench` command-line entry point.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use manifest::Manifest;
use shopbench_core::agent::{
    ChatCompletionsPolicy, Policy, PolicyConfig, PolicySource, PromptVariant, ScriptBook, Track,
};
use shopbench_core::align::{
    build_alignment_data, export_alignment_datasets, oracle_candidate_book, AlignConfig, TitleQueryPolicy, PREFERENCES_FILE,
    SFT_FILE,
};
use shopbench_core::benchgen::{generate_instruction, generate_profile, serialize_profile, GenerationConfig, InstructionTarget};
use shopbench_core::corpus::{DatasetBundle, FixtureData, Split, CATALOG_FILE, USERS_FILE};
use shopbench_core::eval::{
    aggregate, instruction_product, oracle_script_book, run_episodes, CannedSimulator, EpisodeRecord, GradingRule,
    HeuristicPolicy, MultiTurnConfig, PersonaSimulators, RunSpec, SimulatorSource,
};
use shopbench_core::jsonl::{read_records, write_records};
use shopbench_core::memory::{MemoryPlanner, MemoryStrategy, RetrievalConfig};
use shopbench_core::retrieval::{Bm25Index, EmbeddingProvider, HashedEmbedder, RemoteEmbedder, DEFAULT_FIELDS, HASHED_DIM};
use shopbench_core::transport::TransportConfig;
use shopbench_core::webenv::{train_cooc, training_sequences, CoocModel, PrecomputedRecommender, Recommender, World};

const FIXTURE: &str = "fixture";
const INDEX_FILE: &str = "index.json";
const COOC_FILE: &str = "cooc.json";
const EPISODES_FILE: &str = "episodes.jsonl";
const REPORT_JSON: &str = "report.json";
const REPORT_TXT: &str = "report.txt";

#[derive(Parser)]
#[command(name = "shopbench", version, about = "Benchmark harness for personalized shopping agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset.
    Fixture(FixtureArgs),
    /// Build and save the BM25 index over the catalog.
    Index(BuildArgs),
    /// Train and save the co-occurrence recommender.
    TrainRec(BuildArgs),
    /// Regenerate profiles and instruction texts through a provider.
    GenBench(GenArgs),
    /// Evaluate on either track.
    Eval(EvalArgs),
    /// Evaluate on the single-turn track.
    EvalSingle(EvalArgs),
    /// Evaluate on the multi-turn track.
    EvalMulti(EvalArgs),
    /// Export SFT and preference datasets.
    BuildAlign(AlignArgs),
    /// Aggregate an episodes file into a report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TrackArg {
    Single,
    Multi,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MemoryArg {
    None,
    Random,
    Last,
    Relevant,
    Puma,
}

impl From<MemoryArg> for MemoryStrategy {
    fn from(m: MemoryArg) -> Self {
        match m {
            MemoryArg::None => MemoryStrategy::None,
            MemoryArg::Random => MemoryStrategy::Random,
            MemoryArg::Last => MemoryStrategy::Last,
            MemoryArg::Relevant => MemoryStrategy::Relevant,
            MemoryArg::Puma => MemoryStrategy::TaskSpecific,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum VariantArg {
    Plain,
    React,
}

impl From<VariantArg> for PromptVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Plain => PromptVariant::Plain,
            VariantArg::React => PromptVariant::React,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GradingArg {
    Last,
    Best,
}

#[derive(Args, Debug, Serialize)]
struct DatasetArgs {
    /// Dataset directory, or `fixture` for the seeded synthetic dataset.
    #[arg(long)]
    dataset: String,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Users in the generated fixture.
    #[arg(long, default_value_t = 10)]
    fixture_users: usize,
    /// Products in the generated fixture.
    #[arg(long, default_value_t = 50)]
    fixture_products: usize,
}

#[derive(Args, Debug, Serialize)]
struct ProviderArgs {
    /// Chat-completions endpoint URL. The key is read from SHOPBENCH_API_KEY.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4o-mini")]
    model: String,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long, default_value_t = 512)]
    max_tokens: u32,
    /// `oracle`, `heuristic`, or a script file of recorded responses.
    #[arg(long)]
    scripted: Option<String>,
    #[arg(long, value_enum, default_value = "plain")]
    variant: VariantArg,
    /// Concurrent provider requests (defaults to --jobs).
    #[arg(long)]
    inflight: Option<usize>,
}

impl ProviderArgs {
    fn live(&self, n: usize, default_temperature: f64, inflight: usize) -> Result<ChatCompletionsPolicy> {
        let endpoint = self.endpoint.as_ref().context("either --scripted or --endpoint is required")?;
        let temperature = self.temperature.unwrap_or(default_temperature);
        if !(temperature.is_finite() && temperature >= 0.0) {
            bail!("--temperature must be finite and non-negative");
        }
        let config = PolicyConfig {
            endpoint: Some(endpoint.clone()),
            model: self.model.clone(),
            temperature,
            n,
            max_tokens: self.max_tokens,
            variant: self.variant.into(),
        };
        let transport = TransportConfig::new(endpoint.clone()).with_env_key();
        Ok(ChatCompletionsPolicy::new(&config, transport, self.inflight.unwrap_or(inflight))?)
    }
}

#[derive(Args, Debug, Serialize)]
struct FixtureArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    users: usize,
    #[arg(long, default_value_t = 50)]
    products: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct BuildArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Seed for the fixture dataset.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    retries: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct MemoryArgs {
    #[arg(long, value_enum, default_value = "puma")]
    memory: MemoryArg,
    /// Memory token budget.
    #[arg(long, default_value_t = 768, value_parser = parse_budget)]
    budget: usize,
    /// Memory entries considered (defaults to 50 single-turn, 20 multi-turn).
    #[arg(long)]
    k: Option<usize>,
    /// Embedding service URL; the hashed embedder is used when absent.
    #[arg(long)]
    embed_endpoint: Option<String>,
}

fn parse_budget(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(b) if RetrievalConfig::BUDGETS.contains(&b) => Ok(b),
        _ => Err(format!("budget must be one of {:?}", RetrievalConfig::BUDGETS)),
    }
}

impl MemoryArgs {
    fn retrieval(&self, track: Track) -> RetrievalConfig {
        let base = match track {
            Track::Single => RetrievalConfig::single_turn(),
            Track::Multi => RetrievalConfig::multi_turn(),
        };
        RetrievalConfig {
            k: self.k.unwrap_or(base.k),
            token_budget: self.budget,
        }
    }

    fn embedder(&self) -> Result<Arc<dyn EmbeddingProvider>> {
        Ok(match &self.embed_endpoint {
            Some(url) => Arc::new(RemoteEmbedder::new(TransportConfig::new(url.clone()).with_env_key(), HASHED_DIM)?),
            None => Arc::new(HashedEmbedder::default()),
        })
    }
}

#[derive(Args, Debug, Serialize)]
struct WorldArgs {
    /// Saved BM25 index from `index`.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Saved co-occurrence model from `train-rec`.
    #[arg(long)]
    rec_model: Option<PathBuf>,
    /// Precomputed recommendation scores (JSONL), replacing the model.
    #[arg(long, conflicts_with = "rec_model")]
    rec_scores: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[command(flatten)]
    memory: MemoryArgs,
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long, value_enum)]
    track: Option<TrackArg>,
    #[arg(long, default_value_t = 10)]
    max_steps: usize,
    #[arg(long, value_enum, default_value = "last")]
    grading: GradingArg,
    /// Reply of the offline simulator used with scripted agents.
    #[arg(long, default_value = "I don't have anything more specific to add.")]
    simulator_reply: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct AlignArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[command(flatten)]
    memory: MemoryArgs,
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long, default_value_t = 10)]
    candidates: usize,
    #[arg(long, default_value_t = 10)]
    history_cap: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// Episodes file written by an evaluation run.
    #[arg(long)]
    episodes: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Loaded {
    bundle: DatasetBundle,
}

fn load_dataset(args: &DatasetArgs, seed: u64, manifest: &mut Manifest) -> Result<Loaded> {
    let split: Split = args.split.into();
    let bundle = if args.dataset == FIXTURE {
        let b = FixtureData::generate(seed, args.fixture_users, args.fixture_products)?.bundle(split);
        manifest.input_bytes("fixture", &b.to_bytes());
        b
    } else {
        let dir = Path::new(&args.dataset);
        if !dir.is_dir() {
            bail!("dataset directory {} does not exist", dir.display());
        }
        let b = DatasetBundle::load(dir, split).with_context(|| format!("loading dataset {}", dir.display()))?;
        for f in [CATALOG_FILE.to_string(), USERS_FILE.to_string(), shopbench_core::corpus::instructions_file(split)] {
            manifest.input_file(&dir.join(f))?;
        }
        b
    };
    Ok(Loaded { bundle })
}

fn build_world(bundle: &DatasetBundle, args: &WorldArgs, manifest: &mut Manifest) -> Result<Arc<World>> {
    let recommender: Box<dyn Recommender> = match (&args.rec_model, &args.rec_scores) {
        (Some(path), _) => {
            manifest.input_file(path)?;
            let model: CoocModel = serde_json::from_slice(&fs::read(path)?).context("parsing recommender model")?;
            Box::new(model)
        }
        (None, Some(path)) => {
            manifest.input_file(path)?;
            Box::new(PrecomputedRecommender::load(path)?)
        }
        (None, None) => Box::new(train_cooc(training_sequences(&bundle.users), &bundle.catalog)),
    };
    let world = match &args.index {
        Some(path) => {
            manifest.input_file(path)?;
            let index: Bm25Index = serde_json::from_slice(&fs::read(path)?).context("parsing index")?;
            World::new(bundle.catalog.clone(), index, recommender)
        }
        None => World::build(bundle.catalog.clone(), recommender)?,
    };
    Ok(Arc::new(world))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_fixture(args: &FixtureArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let data = FixtureData::generate(args.seed, args.users, args.products)?;
    data.bundle(Split::Train).save(&args.out)?;
    data.bundle(Split::Test).save(&args.out)?;
    let manifest = Manifest::new("fixture", Some(args.seed), args)?;
    let files = [
        CATALOG_FILE.to_string(),
        USERS_FILE.to_string(),
        shopbench_core::corpus::instructions_file(Split::Train),
        shopbench_core::corpus::instructions_file(Split::Test),
    ];
    manifest.finish(&args.out, &files.iter().map(String::as_str).collect::<Vec<_>>())?;
    println!("wrote fixture to {}", args.out.display());
    Ok(())
}

fn cmd_index(args: &BuildArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let mut manifest = Manifest::new("index", Some(args.seed), args)?;
    let Loaded { bundle } = load_dataset(&args.data, args.seed, &mut manifest)?;
    let index = Bm25Index::build(&bundle.catalog, &DEFAULT_FIELDS)?;
    fs::write(args.out.join(INDEX_FILE), serde_json::to_vec(&index)?)?;
    manifest.finish(&args.out, &[INDEX_FILE])?;
    println!("indexed {} products", bundle.catalog.len());
    Ok(())
}

fn cmd_train_rec(args: &BuildArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let mut manifest = Manifest::new("train-rec", Some(args.seed), args)?;
    let Loaded { bundle } = load_dataset(&args.data, args.seed, &mut manifest)?;
    let model = train_cooc(training_sequences(&bundle.users), &bundle.catalog);
    fs::write(args.out.join(COOC_FILE), serde_json::to_vec(&model)?)?;
    manifest.finish(&args.out, &[COOC_FILE])?;
    println!("trained recommender on {} users", bundle.users.len());
    Ok(())
}

fn profile_key(user_id: &str) -> String {
    format!("profile/{user_id}")
}

fn cmd_gen_bench(args: &GenArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let mut manifest = Manifest::new("gen-bench", Some(args.seed), args)?;
    let Loaded { mut bundle } = load_dataset(&args.data, args.seed, &mut manifest)?;
    let config = GenerationConfig {
        retries: args.retries,
        max_tokens: args.provider.max_tokens,
        temperature: args.provider.temperature.unwrap_or(GenerationConfig::default().temperature),
        ..GenerationConfig::default()
    };
    // Scripted runs look responses up by key; live runs share one client.
    let book = match args.provider.scripted.as_deref() {
        Some("oracle") => {
            let mut book = ScriptBook::default();
            for u in &bundle.users {
                book.insert(profile_key(&u.user_id), [serialize_profile(&u.profile)]);
            }
            for i in &bundle.instructions {
                book.insert(i.instruction_id.clone(), [i.text.clone()]);
            }
            Some(book)
        }
        Some(path) => {
            manifest.input_file(Path::new(path))?;
            Some(ScriptBook::load(Path::new(path))?)
        }
        None => None,
    };
    let live = match &book {
        Some(_) => None,
        None => Some(args.provider.live(1, config.temperature, 1)?),
    };
    let policy_for = |key: &str| -> Box<dyn Policy> {
        match (&book, &live) {
            (Some(b), _) => Box::new(b.policy(key)),
            (None, Some(l)) => Box::new(l.clone()),
            (None, None) => unreachable!("one source is always set"),
        }
    };

    let catalog = bundle.catalog.iter().map(|p| (p.product_id.clone(), p.clone())).collect();
    for user in &mut bundle.users {
        user.profile = generate_profile(policy_for(&profile_key(&user.user_id)).as_mut(), user, &catalog, &config)
            .with_context(|| format!("profile for {}", user.user_id))?;
    }
    let users = bundle.users.clone();
    for instr in &mut bundle.instructions {
        let user = users.iter().find(|u| u.user_id == instr.user_id).context("instruction user missing")?;
        let product_id = instruction_product(instr, user).context("instruction product missing")?;
        let product = catalog.get(product_id).cloned().context("product missing from catalog")?;
        let target = match instr.reference_review() {
            Some(text) => InstructionTarget::Review {
                product,
                text: text.to_string(),
            },
            None => InstructionTarget::Product(product),
        };
        instr.text = generate_instruction(policy_for(&instr.instruction_id).as_mut(), instr.task_kind, user, &target, &config)
            .with_context(|| format!("instruction {}", instr.instruction_id))?;
    }
    bundle.save(&args.out)?;
    let files = [
        CATALOG_FILE.to_string(),
        USERS_FILE.to_string(),
        shopbench_core::corpus::instructions_file(bundle.split),
    ];
    manifest.finish(&args.out, &files.iter().map(String::as_str).collect::<Vec<_>>())?;
    println!(
        "generated {} profiles and {} instructions",
        bundle.users.len(),
        bundle.instructions.len()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs, forced: Option<TrackArg>) -> Result<()> {
    let track = match (forced, args.track) {
        (Some(f), Some(t)) if f != t => bail!("--track {t:?} contradicts the subcommand"),
        (Some(f), _) => f,
        (None, Some(t)) => t,
        (None, None) => bail!("--track is required"),
    };
    let track = match track {
        TrackArg::Single => Track::Single,
        TrackArg::Multi => Track::Multi,
    };
    if args.max_steps == 0 {
        bail!("--max-steps must be at least 1");
    }
    ensure_dir(&args.out)?;
    let command = match track {
        Track::Single => "eval-single",
        Track::Multi => "eval-multi",
    };
    let mut manifest = Manifest::new(command, Some(args.seed), args)?;
    let Loaded { bundle } = load_dataset(&args.data, args.seed, &mut manifest)?;
    let world = build_world(&bundle, &args.world, &mut manifest)?;
    let retrieval = args.memory.retrieval(track);
    let planner = MemoryPlanner::new(
        &bundle.users,
        &bundle.catalog,
        args.memory.embedder()?,
        args.memory.memory.into(),
        retrieval,
        retrieval.k,
    )?;

    let canned = CannedSimulator(args.simulator_reply.clone());
    let (policies, simulators): (Box<dyn PolicySource>, Box<dyn SimulatorSource>) = match args.provider.scripted.as_deref() {
        Some("oracle") => (Box::new(oracle_script_book(&bundle.instructions, &world, track)), Box::new(canned)),
        Some("heuristic") => (Box::new(HeuristicPolicy), Box::new(canned)),
        Some(path) => {
            manifest.input_file(Path::new(path))?;
            (Box::new(ScriptBook::load(Path::new(path))?), Box::new(canned))
        }
        None => {
            let live = args.provider.live(1, 0.0, args.jobs)?;
            let sims = PersonaSimulators::new(&bundle.users, &bundle.catalog, live.clone());
            (Box::new(live), Box::new(sims))
        }
    };
    let spec = RunSpec {
        track,
        variant: args.provider.variant.into(),
        multi: MultiTurnConfig {
            max_steps: args.max_steps,
            grading: match args.grading {
                GradingArg::Last => GradingRule::Last,
                GradingArg::Best => GradingRule::Best,
            },
        },
        seed: args.seed,
        jobs: args.jobs,
    };
    let episodes = run_episodes(
        &bundle.instructions,
        world,
        &planner,
        policies.as_ref(),
        Some(simulators.as_ref()),
        &spec,
    )?;
    write_records(&args.out.join(EPISODES_FILE), &episodes)?;
    let report = aggregate(&episodes)?;
    write_json(&args.out.join(REPORT_JSON), &report)?;
    let table = report.render_table();
    fs::write(args.out.join(REPORT_TXT), &table)?;
    manifest.finish(&args.out, &[EPISODES_FILE, REPORT_JSON, REPORT_TXT])?;
    print!("{table}");
    Ok(())
}

fn cmd_build_align(args: &AlignArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let mut manifest = Manifest::new("build-align", Some(args.seed), args)?;
    let Loaded { bundle } = load_dataset(&args.data, args.seed, &mut manifest)?;
    let world = build_world(&bundle, &args.world, &mut manifest)?;
    let retrieval = args.memory.retrieval(Track::Single);
    let planner = MemoryPlanner::new(
        &bundle.users,
        &bundle.catalog,
        args.memory.embedder()?,
        MemoryStrategy::TaskSpecific,
        retrieval,
        retrieval.k,
    )?;
    let (sampler, mut query_policy): (Box<dyn PolicySource>, Box<dyn Policy>) = match args.provider.scripted.as_deref() {
        Some("oracle") => (
            Box::new(oracle_candidate_book(&bundle.instructions, &world, args.candidates)),
            Box::new(TitleQueryPolicy),
        ),
        Some("heuristic") => bail!("build-align supports --scripted oracle or a script file"),
        Some(path) => {
            manifest.input_file(Path::new(path))?;
            (Box::new(ScriptBook::load(Path::new(path))?), Box::new(TitleQueryPolicy))
        }
        None => {
            let sampler = args.provider.live(args.candidates, 1.5, 1)?;
            let labeler = args.provider.live(1, 0.0, 1)?;
            (Box::new(sampler), Box::new(labeler))
        }
    };
    let config = AlignConfig {
        candidates: args.candidates,
        variant: args.provider.variant.into(),
        history_cap: args.history_cap,
    };
    let (sft, prefs) = build_alignment_data(
        &bundle.instructions,
        &world,
        &planner,
        sampler.as_ref(),
        query_policy.as_mut(),
        &config,
    )?;
    export_alignment_datasets(&args.out, &sft, &prefs)?;
    manifest.finish(&args.out, &[SFT_FILE, PREFERENCES_FILE])?;
    println!("wrote {} SFT examples and {} preference pairs", sft.len(), prefs.len());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let episodes: Vec<EpisodeRecord> = read_records(&args.episodes)?;
    let report = aggregate(&episodes)?;
    let table = report.render_table();
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut manifest = Manifest::new("report", None, args)?;
        manifest.input_file(&args.episodes)?;
        write_json(&out.join(REPORT_JSON), &report)?;
        fs::write(out.join(REPORT_TXT), &table)?;
        manifest.finish(out, &[REPORT_JSON, REPORT_TXT])?;
    }
    print!("{table}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Fixture(a) => cmd_fixture(a),
        Command::Index(a) => cmd_index(a),
        Command::TrainRec(a) => cmd_train_rec(a),
        Command::GenBench(a) => cmd_gen_bench(a),
        Command::Eval(a) => cmd_eval(a, None),
        Command::EvalSingle(a) => cmd_eval(a, Some(TrackArg::Single)),
        Command::EvalMulti(a) => cmd_eval(a, Some(TrackArg::Multi)),
        Command::BuildAlign(a) => cmd_build_align(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
