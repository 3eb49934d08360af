//! Training a fairness scorer on synthetic data.
//!
//! Generates a labeled corpus, retrieves BM25 candidates for every query,
//! assembles feature vectors and per-query exposure targets, then fits a
//! one-hidden-layer scorer by gradient descent on the exposure loss. Prints
//! the loss trace and the scores the trained model assigns to documents
//! from different subgroups.
//!
//! Run with `cargo run --example train_fairness_scorer`.

use fairrank::exposure::{target_exposure, FairnessLossConfig};
use fairrank::features::{build_feature_vector, FeatureSchema};
use fairrank::model::Document;
use fairrank::retrieval::{bm25_search, Bm25Params, InvertedIndex};
use fairrank::scorer::{Architecture, ScorerModel};
use fairrank::synth::{generate, SynthCategorySpec, SynthConfig};
use fairrank::trainer::{train, QueryCandidates, TrainConfig};

fn main() -> fairrank::Result<()> {
    let data = generate(&SynthConfig {
        num_docs: 1200,
        num_queries: 6,
        categories: vec![SynthCategorySpec { name: "gender".into(), subgroups: 3 }],
        embedding_dim: 4,
        skew: 0.5,
        noise: 0.5,
        seed: 7,
    })?;
    let index = InvertedIndex::build(&data.corpus);
    let layout = FeatureSchema::for_schema(&data.schema);
    println!(
        "{} documents, {} queries, features: {}",
        data.corpus.len(),
        data.queries.len(),
        layout.names().join(", ")
    );

    let mut batch = Vec::new();
    for query in &data.queries {
        let top = bm25_search(&index, query, 200, &Bm25Params::default())?;
        let docs: Vec<&Document> = top
            .entries()
            .iter()
            .map(|e| data.corpus.get(&e.doc_id).expect("retrieved doc is in the corpus"))
            .collect();
        let features = top
            .entries()
            .iter()
            .map(|e| {
                build_feature_vector(
                    &query.query_id,
                    &e.doc_id,
                    e.relevance,
                    &data.embeddings,
                    &data.schema,
                )
            })
            .collect::<fairrank::Result<Vec<_>>>()?;
        let targets = data
            .schema
            .categories
            .iter()
            .map(|c| target_exposure(&query.query_id, &data.qrels, &data.corpus, c))
            .collect::<fairrank::Result<Vec<_>>>()?;
        batch.push(QueryCandidates::from_documents(&query.query_id, features, &docs, &targets)?);
    }

    let mut model =
        ScorerModel::init(Architecture::Mlp1, layout.len(), 32, layout.names().to_vec(), 2)?;
    let mut config = TrainConfig::new(FairnessLossConfig::equal(&["gender"]));
    config.epochs = 150;
    config.learning_rate = 0.1;

    let trace = train(&mut model, &batch, None, &config)?;
    println!("\nepoch    mean loss");
    for (epoch, loss) in trace.train_loss.iter().enumerate().step_by(25) {
        println!("{:>5}    {loss:.6}", epoch + 1);
    }
    let last = trace.train_loss.last().expect("trace has at least one epoch");
    println!("final    {last:.6}  ({:.1}% of start)", 100.0 * last / trace.train_loss[0]);

    let query = &data.queries[0];
    let top = bm25_search(&index, query, 200, &Bm25Params::default())?;
    let mut scored: Vec<(String, String, f64, f64)> = Vec::new();
    for entry in top.entries() {
        let features = build_feature_vector(
            &query.query_id,
            &entry.doc_id,
            entry.relevance,
            &data.embeddings,
            &data.schema,
        )?;
        let doc = data.corpus.get(&entry.doc_id).expect("retrieved doc is in the corpus");
        let membership = doc.membership.vector("gender").expect("synth docs carry gender");
        let lead = membership
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite membership"))
            .map(|(i, _)| data.schema.categories[0].subgroups[i].clone())
            .expect("membership is non-empty");
        scored.push((entry.doc_id.clone(), lead, entry.relevance, model.score(&features)?));
    }
    scored.sort_by(|a, b| b.3.partial_cmp(&a.3).expect("finite scores"));

    println!("\n{}'s candidates re-sorted by trained fairness score (top 10):", query.query_id);
    println!("  doc      subgroup    bm25     fairness");
    for (doc_id, lead, bm25, fairness) in scored.iter().take(10) {
        println!("  {doc_id}  {lead:<10}  {bm25:>6.2}  {fairness:+.4}");
    }
    println!("\nBM25's own top 10 for the same query:");
    println!("  doc      subgroup    bm25     fairness");
    let by_bm25: Vec<&(String, String, f64, f64)> =
        top.entries().iter().take(10).map(|e| {
            scored.iter().find(|row| row.0 == e.doc_id).expect("scored above")
        }).collect();
    for (doc_id, lead, bm25, fairness) in by_bm25 {
        println!("  {doc_id}  {lead:<10}  {bm25:>6.2}  {fairness:+.4}");
    }
    Ok(())
}
