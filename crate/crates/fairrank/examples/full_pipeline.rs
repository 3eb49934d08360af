//! The whole pipeline, end to end, through the on-disk formats.
//!
//! Generates a synthetic collection into a temp directory, then loads it
//! back and runs every stage the way the CLI does: index, BM25 retrieval
//! into a TREC run file, feature extraction, scorer training with a
//! validation split, fairness-aware reranking, and evaluation of both runs
//! with a paired significance test.
//!
//! Run with `cargo run --example full_pipeline`.

use fairrank::blend::{blend_and_rank, BlendConfig, Candidate};
use fairrank::evaluation::{evaluate_run, paired_t_test};
use fairrank::exposure::{target_exposure, FairnessLossConfig};
use fairrank::features::{build_feature_vector, EmbeddingTable, FeatureSchema};
use fairrank::model::{load_corpus, load_qrels, load_queries, load_schema, Document};
use fairrank::retrieval::{bm25_search, read_run, write_run, Bm25Params, InvertedIndex};
use fairrank::scorer::{Architecture, ScorerModel};
use fairrank::synth::{generate, SynthCategorySpec, SynthConfig};
use fairrank::trainer::{train, QueryCandidates, TrainConfig};

fn main() -> fairrank::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let dir = dir.path();

    generate(&SynthConfig {
        num_docs: 3000,
        num_queries: 15,
        categories: vec![SynthCategorySpec { name: "gender".into(), subgroups: 3 }],
        embedding_dim: 4,
        skew: 0.5,
        noise: 0.5,
        seed: 5,
    })?
    .write_to_dir(dir)?;
    println!("wrote corpus.jsonl, schema.json, queries.tsv, qrels.txt, embeddings.jsonl");

    let schema = load_schema(dir.join("schema.json"))?;
    let corpus = load_corpus(dir.join("corpus.jsonl"), &schema)?;
    let queries = load_queries(dir.join("queries.tsv"))?;
    let qrels = load_qrels(dir.join("qrels.txt"))?;
    let embeddings = EmbeddingTable::load(dir.join("embeddings.jsonl"))?;

    let index = InvertedIndex::build(&corpus);
    index.save(dir.join("index.json"))?;
    let index = InvertedIndex::load(dir.join("index.json"))?;
    println!("indexed {} documents", index.num_documents());

    let lists = queries
        .iter()
        .map(|q| bm25_search(&index, q, 200, &Bm25Params::default()))
        .collect::<fairrank::Result<Vec<_>>>()?;
    write_run(dir.join("bm25.run"), &lists, "bm25")?;
    let lists = read_run(dir.join("bm25.run"))?;
    println!("retrieved {} candidates per query", lists[0].len());

    let layout = FeatureSchema::for_schema(&schema);
    let mut batch = Vec::new();
    for (query, list) in queries.iter().zip(&lists) {
        let docs: Vec<&Document> = list
            .entries()
            .iter()
            .map(|e| corpus.get(&e.doc_id).expect("retrieved doc is in the corpus"))
            .collect();
        let features = list
            .entries()
            .iter()
            .map(|e| {
                build_feature_vector(&query.query_id, &e.doc_id, e.relevance, &embeddings, &schema)
            })
            .collect::<fairrank::Result<Vec<_>>>()?;
        let targets = schema
            .categories
            .iter()
            .map(|c| target_exposure(&query.query_id, &qrels, &corpus, c))
            .collect::<fairrank::Result<Vec<_>>>()?;
        batch.push(QueryCandidates::from_documents(&query.query_id, features, &docs, &targets)?);
    }
    let (validation, training) = batch.split_at(3);

    let mut model =
        ScorerModel::init(Architecture::Mlp1, layout.len(), 32, layout.names().to_vec(), 2)?;
    let mut config = TrainConfig::new(FairnessLossConfig::equal(&["gender"]));
    config.epochs = 150;
    config.learning_rate = 0.1;
    let trace = train(&mut model, training, Some(validation), &config)?;
    trace.write_tsv(dir.join("trace.tsv"))?;
    println!(
        "trained: loss {:.4} -> {:.4}, validation {:.4} -> {:.4}",
        trace.train_loss[0],
        trace.train_loss.last().expect("non-empty trace"),
        trace.validation_loss.as_ref().expect("validation was supplied")[0],
        trace.validation_loss.as_ref().expect("validation was supplied").last().unwrap()
    );
    model.save(dir.join("scorer.json"))?;
    let model = ScorerModel::load(dir.join("scorer.json"))?;

    let alpha = 0.8;
    let mut reranked = Vec::new();
    for (query, list) in queries.iter().zip(&lists) {
        let candidates = list
            .entries()
            .iter()
            .map(|e| {
                let features = build_feature_vector(
                    &query.query_id,
                    &e.doc_id,
                    e.relevance,
                    &embeddings,
                    &schema,
                )?;
                Ok(Candidate {
                    doc_id: e.doc_id.clone(),
                    relevance: e.relevance,
                    fairness: model.score(&features)?,
                })
            })
            .collect::<fairrank::Result<Vec<_>>>()?;
        reranked.push(blend_and_rank(
            &query.query_id,
            &candidates,
            &BlendConfig { alpha, normalize: true },
        )?);
    }
    write_run(dir.join("reranked.run"), &reranked, "rerank")?;

    let before = evaluate_run(&lists, &qrels, &corpus, &schema, 20)?;
    let after = evaluate_run(&reranked, &qrels, &corpus, &schema, 20)?;
    println!("\n            awrf@20  ndcg@20  product");
    println!(
        "bm25        {:.4}   {:.4}   {:.4}",
        before.mean_awrf, before.mean_ndcg, before.product
    );
    println!(
        "alpha {alpha} {:.4}   {:.4}   {:.4}",
        after.mean_awrf, after.mean_ndcg, after.product
    );

    let awrf_after: Vec<f64> = after.per_query.iter().map(|q| q.awrf).collect();
    let awrf_before: Vec<f64> = before.per_query.iter().map(|q| q.awrf).collect();
    let test = paired_t_test(&awrf_after, &awrf_before)?;
    println!("\npaired t-test on per-query awrf: t = {:.3}, p = {:.5}", test.t, test.p);
    Ok(())
}
