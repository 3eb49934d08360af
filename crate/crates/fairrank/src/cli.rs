//! Command-line pipeline: indexing, retrieval, feature building, training,
//! re-ranking, blend sweeps, evaluation, significance testing, and synthetic
//! data generation. Every command that writes an output also writes a
//! [`RunManifest`](crate::manifest::RunManifest) beside it.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::blend::{blend_and_rank, sweep_alpha, write_sweep_tsv, BlendConfig, Candidate, SweepInputs};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_run, paired_t_test, read_eval_tsv, write_eval_tsv, QueryEval};
use crate::exposure::{target_exposure, FairnessLossConfig};
use crate::features::{build_feature_vector, write_features, EmbeddingTable, FeatureSchema};
use crate::manifest::RunManifest;
use crate::model::{
    load_corpus, load_qrels, load_queries, load_schema, validate_corpus, Corpus, Document,
    ExposureDistribution, Judgment, RankedList, Schema,
};
use crate::retrieval::{
    bm25_search, read_run, rm3_search, write_run, Bm25Params, InvertedIndex, Rm3Params,
};
use crate::scorer::{Architecture, ScorerModel};
use crate::synth::{generate, SynthCategorySpec, SynthConfig};
use crate::trainer::{train, QueryCandidates, TrainConfig};

/// Exit code for a successful run.
pub const EXIT_SUCCESS: i32 = 0;
/// Exit code for data errors: missing or malformed input files.
pub const EXIT_DATA_ERROR: i32 = 1;
/// Exit code for usage errors: bad flags or out-of-range option values.
pub const EXIT_USAGE_ERROR: i32 = 2;

/// Parses `args` (including the program name) and runs the subcommand.
///
/// Returns the process exit code: 0 on success, 2 on usage errors (unknown
/// flags, invalid option values), 1 on data errors (missing files, malformed
/// input). Diagnostics go to stderr; command results go to stdout.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE_ERROR } else { EXIT_SUCCESS };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::InvalidArgument(_) => EXIT_USAGE_ERROR,
                _ => EXIT_DATA_ERROR,
            }
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Index(args) => cmd_index(args),
        Command::Retrieve(args) => cmd_retrieve(args),
        Command::Features(args) => cmd_features(args),
        Command::Train(args) => cmd_train(args),
        Command::Rerank(args) => cmd_rerank(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Ttest(args) => cmd_ttest(args),
        Command::GenSynth(args) => cmd_gen_synth(args),
    }
}

#[derive(Parser)]
#[command(
    name = "fairrank",
    version,
    about = "Fairness-aware re-ranking: retrieval, scorer training, blending, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an inverted index from a corpus
    Index(IndexArgs),
    /// Rank documents for each query with BM25 or RM3
    Retrieve(RetrieveArgs),
    /// Write feature vectors for the candidates in a run file
    Features(FeaturesArgs),
    /// Train a fairness scorer on the candidates in a run file
    Train(TrainArgs),
    /// Re-rank a run by blending relevance with fairness scores
    Rerank(RerankArgs),
    /// Evaluate the blend across the whole alpha grid
    Sweep(SweepArgs),
    /// Score a run file with AWRF and nDCG
    Evaluate(EvaluateArgs),
    /// Paired t-test between two evaluation tables
    Ttest(TtestArgs),
    /// Generate a seeded synthetic dataset
    #[command(name = "gen-synth")]
    GenSynth(GenSynthArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Corpus JSONL file
    #[arg(long)]
    corpus: PathBuf,
    /// Fairness schema JSON file
    #[arg(long)]
    schema: PathBuf,
    /// Output index file
    #[arg(long)]
    out: PathBuf,
}

fn cmd_index(args: &IndexArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let corpus = load_corpus(&args.corpus, &schema)?;
    let violations = validate_corpus(&corpus, &schema);
    if !violations.is_empty() {
        for v in &violations {
            if v.doc_id.is_empty() {
                eprintln!("corpus: {}", v.message);
            } else {
                eprintln!("document '{}': {}", v.doc_id, v.message);
            }
        }
        return Err(Error::parse(
            &args.corpus,
            0,
            format!("corpus failed validation with {} problem(s)", violations.len()),
        ));
    }
    let index = InvertedIndex::build(&corpus);
    index.save(&args.out)?;

    let mut manifest = RunManifest::new("index");
    manifest.set("corpus", args.corpus.display());
    manifest.set("schema", args.schema.display());
    manifest.set("out", args.out.display());
    manifest.add_input("corpus", &args.corpus)?;
    manifest.add_input("schema", &args.schema)?;
    manifest.write_for_output(&args.out)?;
    Ok(())
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum RetrievalModel {
    Bm25,
    Rm3,
}

impl RetrievalModel {
    fn tag(self) -> &'static str {
        match self {
            RetrievalModel::Bm25 => "bm25",
            RetrievalModel::Rm3 => "rm3",
        }
    }
}

#[derive(Args)]
struct RetrieveArgs {
    /// Index file written by `index`
    #[arg(long)]
    index: PathBuf,
    /// Queries TSV file
    #[arg(long)]
    queries: PathBuf,
    /// Candidates to retrieve per query
    #[arg(long, default_value_t = 500)]
    k: usize,
    /// Retrieval model
    #[arg(long, value_enum, default_value_t = RetrievalModel::Bm25)]
    model: RetrievalModel,
    /// BM25 term-frequency saturation
    #[arg(long, default_value_t = 0.9)]
    k1: f64,
    /// BM25 length normalization
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    /// RM3 feedback documents
    #[arg(long, default_value_t = 10)]
    fb_docs: usize,
    /// RM3 expansion terms
    #[arg(long, default_value_t = 10)]
    fb_terms: usize,
    /// RM3 weight on the original query
    #[arg(long, default_value_t = 0.5)]
    mix: f64,
    /// Output run file
    #[arg(long)]
    out: PathBuf,
}

fn cmd_retrieve(args: &RetrieveArgs) -> Result<()> {
    let index = InvertedIndex::load(&args.index)?;
    let queries = load_queries(&args.queries)?;
    let bm25 = Bm25Params { k1: args.k1, b: args.b };
    let rm3 = Rm3Params { fb_docs: args.fb_docs, fb_terms: args.fb_terms, mix: args.mix };
    let mut lists = Vec::with_capacity(queries.len());
    for query in &queries {
        lists.push(match args.model {
            RetrievalModel::Bm25 => bm25_search(&index, query, args.k, &bm25)?,
            RetrievalModel::Rm3 => rm3_search(&index, query, args.k, &rm3, &bm25)?,
        });
    }
    write_run(&args.out, &lists, args.model.tag())?;

    let mut manifest = RunManifest::new("retrieve");
    manifest.set("index", args.index.display());
    manifest.set("queries", args.queries.display());
    manifest.set("k", args.k);
    manifest.set("model", args.model.tag());
    manifest.set("k1", args.k1);
    manifest.set("b", args.b);
    manifest.set("fb-docs", args.fb_docs);
    manifest.set("fb-terms", args.fb_terms);
    manifest.set("mix", args.mix);
    manifest.set("out", args.out.display());
    manifest.add_input("index", &args.index)?;
    manifest.add_input("queries", &args.queries)?;
    manifest.write_for_output(&args.out)?;
    Ok(())
}

#[derive(Args)]
struct FeaturesArgs {
    /// Run file naming the candidates
    #[arg(long)]
    run: PathBuf,
    /// Fairness schema JSON file
    #[arg(long)]
    schema: PathBuf,
    /// Embeddings JSONL file
    #[arg(long)]
    embeddings: PathBuf,
    /// Output features TSV
    #[arg(long)]
    out: PathBuf,
}

fn cmd_features(args: &FeaturesArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let table = EmbeddingTable::load(&args.embeddings)?;
    let lists = read_run(&args.run)?;
    let feature_schema = FeatureSchema::for_schema(&schema);
    let mut rows = Vec::new();
    for list in &lists {
        for entry in list.entries() {
            let vector =
                build_feature_vector(&list.query_id, &entry.doc_id, entry.relevance, &table, &schema)?;
            rows.push((list.query_id.clone(), entry.doc_id.clone(), vector));
        }
    }
    write_features(&args.out, &feature_schema, &rows)?;

    let mut manifest = RunManifest::new("features");
    manifest.set("run", args.run.display());
    manifest.set("schema", args.schema.display());
    manifest.set("embeddings", args.embeddings.display());
    manifest.set("out", args.out.display());
    manifest.add_input("run", &args.run)?;
    manifest.add_input("schema", &args.schema)?;
    manifest.add_input("embeddings", &args.embeddings)?;
    manifest.write_for_output(&args.out)?;
    Ok(())
}

#[derive(Args)]
struct TrainArgs {
    /// Run file naming the training candidates
    #[arg(long)]
    run: PathBuf,
    /// Corpus JSONL file (group memberships)
    #[arg(long)]
    corpus: PathBuf,
    /// Fairness schema JSON file
    #[arg(long)]
    schema: PathBuf,
    /// Relevance judgments (target exposure estimation)
    #[arg(long)]
    qrels: PathBuf,
    /// Embeddings JSONL file
    #[arg(long)]
    embeddings: PathBuf,
    /// Full-batch epochs
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    /// Learning rate
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Weight initialization seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Scorer architecture
    #[arg(long, default_value = "mlp1", value_parser = parse_architecture)]
    arch: Architecture,
    /// Hidden width (mlp1 only)
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    /// Fraction of queries held out for a validation trace
    #[arg(long, default_value_t = 0.0)]
    val_split: f64,
    /// Output model file; the loss trace goes to <out>.trace.tsv
    #[arg(long)]
    out: PathBuf,
}

fn parse_architecture(s: &str) -> Result<Architecture> {
    Architecture::from_str(s)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let corpus = load_corpus(&args.corpus, &schema)?;
    let qrels = load_qrels(&args.qrels)?;
    let table = EmbeddingTable::load(&args.embeddings)?;
    let lists = read_run(&args.run)?;
    let feature_schema = FeatureSchema::for_schema(&schema);

    let batch = training_batch(&lists, &corpus, &schema, &qrels, &table)?;
    let (train_set, val_set) = split_validation(batch, args.val_split)?;

    let mut model = ScorerModel::init(
        args.arch,
        feature_schema.len(),
        args.hidden,
        feature_schema.names().to_vec(),
        args.seed,
    )?;
    let categories: Vec<&str> = schema.categories.iter().map(|c| c.name.as_str()).collect();
    let mut config = TrainConfig::new(FairnessLossConfig::equal(&categories));
    config.epochs = args.epochs;
    config.learning_rate = args.lr;
    let validation = if val_set.is_empty() { None } else { Some(val_set.as_slice()) };
    let trace = train(&mut model, &train_set, validation, &config)?;

    model.save(&args.out)?;
    let trace_path = sibling_with_suffix(&args.out, ".trace.tsv");
    trace.write_tsv(&trace_path)?;

    let mut manifest = RunManifest::new("train");
    manifest.set("run", args.run.display());
    manifest.set("corpus", args.corpus.display());
    manifest.set("schema", args.schema.display());
    manifest.set("qrels", args.qrels.display());
    manifest.set("embeddings", args.embeddings.display());
    manifest.set("epochs", args.epochs);
    manifest.set("lr", args.lr);
    manifest.set("seed", args.seed);
    manifest.set("arch", args.arch);
    manifest.set("hidden", args.hidden);
    manifest.set("val-split", args.val_split);
    manifest.set("out", args.out.display());
    manifest.set_seed(args.seed);
    manifest.add_input("run", &args.run)?;
    manifest.add_input("corpus", &args.corpus)?;
    manifest.add_input("schema", &args.schema)?;
    manifest.add_input("qrels", &args.qrels)?;
    manifest.add_input("embeddings", &args.embeddings)?;
    manifest.write_for_output(&args.out)?;
    Ok(())
}

/// Builds one training instance per ranked list: feature rows from the
/// embeddings, membership rows from the corpus, and per-category target
/// exposure from the judgments.
fn training_batch(
    lists: &[RankedList],
    corpus: &Corpus,
    schema: &Schema,
    qrels: &[Judgment],
    table: &EmbeddingTable,
) -> Result<Vec<QueryCandidates>> {
    let mut batch = Vec::with_capacity(lists.len());
    for list in lists {
        let mut unknown: Vec<String> = Vec::new();
        let mut documents: Vec<&Document> = Vec::with_capacity(list.len());
        let mut features = Vec::with_capacity(list.len());
        for entry in list.entries() {
            match corpus.get(&entry.doc_id) {
                Some(doc) => documents.push(doc),
                None => {
                    unknown.push(entry.doc_id.clone());
                    continue;
                }
            }
            features.push(build_feature_vector(
                &list.query_id,
                &entry.doc_id,
                entry.relevance,
                table,
                schema,
            )?);
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownDocuments(unknown.join(", ")));
        }
        let targets: Vec<ExposureDistribution> = schema
            .categories
            .iter()
            .map(|category| target_exposure(&list.query_id, qrels, corpus, category))
            .collect::<Result<_>>()?;
        batch.push(QueryCandidates::from_documents(
            list.query_id.clone(),
            features,
            &documents,
            &targets,
        )?);
    }
    Ok(batch)
}

/// Holds out the last `ceil(fraction * queries)` query ids in sorted order
/// as the validation set; the remainder trains. Order within each set
/// follows the input batch.
fn split_validation(
    batch: Vec<QueryCandidates>,
    fraction: f64,
) -> Result<(Vec<QueryCandidates>, Vec<QueryCandidates>)> {
    if !fraction.is_finite() || !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "validation split must lie in [0, 1), got {fraction}"
        )));
    }
    let held_out = (fraction * batch.len() as f64).ceil() as usize;
    if held_out == 0 {
        return Ok((batch, Vec::new()));
    }
    let mut ids: Vec<String> = batch.iter().map(|q| q.query_id.clone()).collect();
    ids.sort();
    let val_ids: BTreeSet<String> = ids.split_off(ids.len() - held_out).into_iter().collect();
    let mut train_set = Vec::new();
    let mut val_set = Vec::new();
    for instance in batch {
        if val_ids.contains(&instance.query_id) {
            val_set.push(instance);
        } else {
            train_set.push(instance);
        }
    }
    if train_set.is_empty() {
        return Err(Error::InvalidArgument(
            "validation split leaves no training queries".into(),
        ));
    }
    Ok((train_set, val_set))
}

fn sibling_with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(suffix);
    path.with_file_name(name)
}

#[derive(Args)]
struct RerankArgs {
    /// Run file with the candidates to re-rank
    #[arg(long)]
    run: PathBuf,
    /// Trained scorer model file
    #[arg(long)]
    model: PathBuf,
    /// Fairness schema JSON file
    #[arg(long)]
    schema: PathBuf,
    /// Embeddings JSONL file
    #[arg(long)]
    embeddings: PathBuf,
    /// Weight on the fairness score, in [0, 1]
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Blend raw scores instead of min-max normalized ones
    #[arg(long)]
    no_normalize: bool,
    /// Output run file
    #[arg(long)]
    out: PathBuf,
}

fn cmd_rerank(args: &RerankArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let table = EmbeddingTable::load(&args.embeddings)?;
    let model = ScorerModel::load(&args.model)?;
    let feature_schema = FeatureSchema::for_schema(&schema);
    check_model_schema(&model, &feature_schema)?;
    let lists = read_run(&args.run)?;
    let candidates = scored_candidates(&lists, &model, &table, &schema)?;
    let config = BlendConfig { alpha: args.alpha, normalize: !args.no_normalize };
    let mut reranked = Vec::with_capacity(candidates.len());
    for (query_id, cands) in &candidates {
        reranked.push(blend_and_rank(query_id, cands, &config)?);
    }
    write_run(&args.out, &reranked, "rerank")?;

    let mut manifest = RunManifest::new("rerank");
    manifest.set("run", args.run.display());
    manifest.set("model", args.model.display());
    manifest.set("schema", args.schema.display());
    manifest.set("embeddings", args.embeddings.display());
    manifest.set("alpha", args.alpha);
    manifest.set("no-normalize", args.no_normalize);
    manifest.set("out", args.out.display());
    manifest.add_input("run", &args.run)?;
    manifest.add_input("model", &args.model)?;
    manifest.add_input("schema", &args.schema)?;
    manifest.add_input("embeddings", &args.embeddings)?;
    manifest.write_for_output(&args.out)?;
    Ok(())
}

/// Scores every run candidate with the model: relevance comes from the run
/// file, fairness from the scorer over freshly built features.
fn scored_candidates(
    lists: &[RankedList],
    model: &ScorerModel,
    table: &EmbeddingTable,
    schema: &Schema,
) -> Result<Vec<(String, Vec<Candidate>)>> {
    let mut out = Vec::with_capacity(lists.len());
    for list in lists {
        let mut cands = Vec::with_capacity(list.len());
        for entry in list.entries() {
            let features =
                build_feature_vector(&list.query_id, &entry.doc_id, entry.relevance, table, schema)?;
            let fairness = model.score(&features)?;
            cands.push(Candidate {
                doc_id: entry.doc_id.clone(),
                relevance: entry.relevance,
                fairness,
            });
        }
        out.push((list.query_id.clone(), cands));
    }
    Ok(out)
}

fn check_model_schema(model: &ScorerModel, feature_schema: &FeatureSchema) -> Result<()> {
    if model.feature_schema() == feature_schema.names() {
        return Ok(());
    }
    let detail = if model.feature_schema().len() != feature_schema.len() {
        format!(
            "model expects {} features, schema yields {}",
            model.feature_schema().len(),
            feature_schema.len()
        )
    } else {
        let (i, (have, want)) = model
            .feature_schema()
            .iter()
            .zip(feature_schema.names())
            .enumerate()
            .find(|(_, (a, b))| a != b)
            .map(|(i, (a, b))| (i, (a.clone(), b.clone())))
            .unwrap_or((0, (String::new(), String::new())));
        format!("feature {i} is '{have}' in the model but '{want}' for this schema")
    };
    Err(Error::DimensionMismatch(format!(
        "model feature schema does not match --schema: {detail}"
    )))
}

#[derive(Args)]
struct SweepArgs {
    /// Run file with the candidates to re-rank
    #[arg(long)]
    run: PathBuf,
    /// Trained scorer model file
    #[arg(long)]
    model: PathBuf,
    /// Fairness schema JSON file
    #[arg(long)]
    schema: PathBuf,
    /// Embeddings JSONL file
    #[arg(long)]
    embeddings: PathBuf,
    /// Relevance judgments
    #[arg(long)]
    qrels: PathBuf,
    /// Corpus JSONL file (group memberships)
    #[arg(long)]
    corpus: PathBuf,
    /// Metric cutoff
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Alpha grid step; must divide 1 evenly
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Blend raw scores instead of min-max normalized ones
    #[arg(long)]
    no_normalize: bool,
    /// Output TSV file
    #[arg(long)]
    out: PathBuf,
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let corpus = load_corpus(&args.corpus, &schema)?;
    let qrels = load_qrels(&args.qrels)?;
    let table = EmbeddingTable::load(&args.embeddings)?;
    let model = ScorerModel::load(&args.model)?;
    let feature_schema = FeatureSchema::for_schema(&schema);
    check_model_schema(&model, &feature_schema)?;
    let lists = read_run(&args.run)?;
    let candidates = scored_candidates(&lists, &model, &table, &schema)?;
    let inputs = SweepInputs {
        candidates: &candidates,
        qrels: &qrels,
        corpus: &corpus,
        schema: &schema,
        k: args.k,
    };
    let rows = sweep_alpha(&inputs, args.step, !args.no_normalize)?;
    write_sweep_tsv(&args.out, &rows, args.k)?;

    let mut manifest = RunManifest::new("sweep");
    manifest.set("run", args.run.display());
    manifest.set("model", args.model.display());
    manifest.set("schema", args.schema.display());
    manifest.set("embeddings", args.embeddings.display());
    manifest.set("qrels", args.qrels.display());
    manifest.set("corpus", args.corpus.display());
    manifest.set("k", args.k);
    manifest.set("step", args.step);
    manifest.set("no-normalize", args.no_normalize);
    manifest.set("out", args.out.display());
    manifest.add_input("run", &args.run)?;
    manifest.add_input("model", &args.model)?;
    manifest.add_input("schema", &args.schema)?;
    manifest.add_input("embeddings", &args.embeddings)?;
    manifest.add_input("qrels", &args.qrels)?;
    manifest.add_input("corpus", &args.corpus)?;
    manifest.write_for_output(&args.out)?;
    Ok(())
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run file to score
    #[arg(long)]
    run: PathBuf,
    /// Relevance judgments
    #[arg(long)]
    qrels: PathBuf,
    /// Corpus JSONL file (group memberships)
    #[arg(long)]
    corpus: PathBuf,
    /// Fairness schema JSON file
    #[arg(long)]
    schema: PathBuf,
    /// Metric cutoff
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Output TSV file
    #[arg(long)]
    out: PathBuf,
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let corpus = load_corpus(&args.corpus, &schema)?;
    let qrels = load_qrels(&args.qrels)?;
    let lists = read_run(&args.run)?;
    let report = evaluate_run(&lists, &qrels, &corpus, &schema, args.k)?;
    write_eval_tsv(&args.out, &report)?;
    println!("awrf@{}: {}", report.k, report.mean_awrf);
    println!("ndcg@{}: {}", report.k, report.mean_ndcg);
    println!("product: {}", report.product);

    let mut manifest = RunManifest::new("evaluate");
    manifest.set("run", args.run.display());
    manifest.set("qrels", args.qrels.display());
    manifest.set("corpus", args.corpus.display());
    manifest.set("schema", args.schema.display());
    manifest.set("k", args.k);
    manifest.set("out", args.out.display());
    manifest.add_input("run", &args.run)?;
    manifest.add_input("qrels", &args.qrels)?;
    manifest.add_input("corpus", &args.corpus)?;
    manifest.add_input("schema", &args.schema)?;
    manifest.write_for_output(&args.out)?;
    Ok(())
}

#[derive(Args)]
struct TtestArgs {
    /// First evaluation table (TSV written by `evaluate`)
    run_a: PathBuf,
    /// Second evaluation table
    run_b: PathBuf,
}

fn cmd_ttest(args: &TtestArgs) -> Result<()> {
    let a = read_eval_tsv(&args.run_a)?;
    let b = read_eval_tsv(&args.run_b)?;
    let (awrf_a, awrf_b, ndcg_a, ndcg_b) = paired_metric_samples(&a, &b)?;
    let awrf = paired_t_test(&awrf_a, &awrf_b)?;
    let ndcg = paired_t_test(&ndcg_a, &ndcg_b)?;
    println!("queries: {}", a.len());
    println!("awrf: t = {}, p = {}", awrf.t, awrf.p);
    println!("ndcg: t = {}, p = {}", ndcg.t, ndcg.p);
    Ok(())
}

/// Pairs the two per-query tables by query id, requiring identical id sets.
#[allow(clippy::type_complexity)]
fn paired_metric_samples(
    a: &[QueryEval],
    b: &[QueryEval],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let ids_a: BTreeSet<&str> = a.iter().map(|row| row.query_id.as_str()).collect();
    let ids_b: BTreeSet<&str> = b.iter().map(|row| row.query_id.as_str()).collect();
    if ids_a != ids_b {
        let only_a: Vec<&str> = ids_a.difference(&ids_b).copied().collect();
        let only_b: Vec<&str> = ids_b.difference(&ids_a).copied().collect();
        return Err(Error::InvalidArgument(format!(
            "evaluation tables cover different queries (only in first: [{}]; only in second: [{}])",
            only_a.join(", "),
            only_b.join(", ")
        )));
    }
    let by_id: std::collections::BTreeMap<&str, &QueryEval> =
        b.iter().map(|row| (row.query_id.as_str(), row)).collect();
    let mut awrf_a = Vec::with_capacity(a.len());
    let mut awrf_b = Vec::with_capacity(a.len());
    let mut ndcg_a = Vec::with_capacity(a.len());
    let mut ndcg_b = Vec::with_capacity(a.len());
    for row in a {
        let other = by_id[row.query_id.as_str()];
        awrf_a.push(row.awrf);
        awrf_b.push(other.awrf);
        ndcg_a.push(row.ndcg);
        ndcg_b.push(other.ndcg);
    }
    Ok((awrf_a, awrf_b, ndcg_a, ndcg_b))
}

#[derive(Args)]
struct GenSynthArgs {
    /// Total documents
    #[arg(long, default_value_t = 1000)]
    num_docs: usize,
    /// Total queries
    #[arg(long, default_value_t = 50)]
    num_queries: usize,
    /// Fairness categories as name:subgroups, comma separated
    #[arg(long, default_value = "gender:3", value_delimiter = ',', value_parser = parse_category_spec)]
    categories: Vec<SynthCategorySpec>,
    /// Embedding dimensionality (default: smallest valid for the categories)
    #[arg(long)]
    embedding_dim: Option<usize>,
    /// How far retrievable relevant sets deviate from target proportions, in [0, 1]
    #[arg(long, default_value_t = 0.5)]
    skew: f64,
    /// Embedding noise standard deviation
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Generator seed
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn parse_category_spec(s: &str) -> Result<SynthCategorySpec> {
    let (name, count) = s.split_once(':').ok_or_else(|| {
        Error::InvalidArgument(format!("category spec '{s}' must look like name:subgroups"))
    })?;
    let subgroups: usize = count.parse().map_err(|_| {
        Error::InvalidArgument(format!("category spec '{s}' has a non-numeric subgroup count"))
    })?;
    Ok(SynthCategorySpec { name: name.to_string(), subgroups })
}

fn cmd_gen_synth(args: &GenSynthArgs) -> Result<()> {
    let embedding_dim = args
        .embedding_dim
        .unwrap_or_else(|| SynthConfig::required_embedding_dim(&args.categories));
    let config = SynthConfig {
        num_docs: args.num_docs,
        num_queries: args.num_queries,
        categories: args.categories.clone(),
        embedding_dim,
        skew: args.skew,
        noise: args.noise,
        seed: args.seed,
    };
    let data = generate(&config)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    data.write_to_dir(&args.out)?;

    let categories: Vec<String> = args
        .categories
        .iter()
        .map(|c| format!("{}:{}", c.name, c.subgroups))
        .collect();
    let mut manifest = RunManifest::new("gen-synth");
    manifest.set("num-docs", args.num_docs);
    manifest.set("num-queries", args.num_queries);
    manifest.set("categories", categories.join(","));
    manifest.set("embedding-dim", embedding_dim);
    manifest.set("skew", args.skew);
    manifest.set("noise", args.noise);
    manifest.set("seed", args.seed);
    manifest.set("out", args.out.display());
    manifest.set_seed(args.seed);
    manifest.write_for_output(&args.out)?;
    Ok(())
}
