//! Trading relevance against fairness with the blend weight alpha.
//!
//! Trains a scorer on synthetic data, then combines the BM25 score with the
//! scorer output as `(1 - alpha) * relevance + alpha * fairness` and sweeps
//! alpha over a grid. The printed table shows AWRF rising and nDCG giving
//! way as alpha grows, and which alpha maximizes their product.
//!
//! Run with `cargo run --example blend_sweep`.

use fairrank::blend::{blend_and_rank, sweep_alpha, BlendConfig, Candidate, SweepInputs};
use fairrank::exposure::{target_exposure, FairnessLossConfig};
use fairrank::features::{build_feature_vector, FeatureSchema};
use fairrank::model::Document;
use fairrank::retrieval::{bm25_search, Bm25Params, InvertedIndex};
use fairrank::scorer::{Architecture, ScorerModel};
use fairrank::synth::{generate, SynthCategorySpec, SynthConfig, SynthData};
use fairrank::trainer::{train, QueryCandidates, TrainConfig};

fn candidates_for(
    data: &SynthData,
    index: &InvertedIndex,
    model: &ScorerModel,
    k: usize,
) -> fairrank::Result<Vec<(String, Vec<Candidate>)>> {
    let mut out = Vec::new();
    for query in &data.queries {
        let top = bm25_search(index, query, k, &Bm25Params::default())?;
        let mut list = Vec::with_capacity(top.len());
        for entry in top.entries() {
            let features = build_feature_vector(
                &query.query_id,
                &entry.doc_id,
                entry.relevance,
                &data.embeddings,
                &data.schema,
            )?;
            list.push(Candidate {
                doc_id: entry.doc_id.clone(),
                relevance: entry.relevance,
                fairness: model.score(&features)?,
            });
        }
        out.push((query.query_id.clone(), list));
    }
    Ok(out)
}

fn main() -> fairrank::Result<()> {
    let data = generate(&SynthConfig {
        num_docs: 3000,
        num_queries: 15,
        categories: vec![SynthCategorySpec { name: "gender".into(), subgroups: 3 }],
        embedding_dim: 4,
        skew: 0.5,
        noise: 0.5,
        seed: 11,
    })?;
    let index = InvertedIndex::build(&data.corpus);
    let layout = FeatureSchema::for_schema(&data.schema);

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
    train(&mut model, &batch, None, &config)?;

    let candidates = candidates_for(&data, &index, &model, 200)?;

    let rows = sweep_alpha(
        &SweepInputs {
            candidates: &candidates,
            qrels: &data.qrels,
            corpus: &data.corpus,
            schema: &data.schema,
            k: 20,
        },
        0.1,
        true,
    )?;
    println!("alpha   awrf@20  ndcg@20  product");
    for row in &rows {
        println!("{:>5.2}   {:.4}   {:.4}   {:.4}", row.alpha, row.awrf, row.ndcg, row.product);
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.product.partial_cmp(&b.product).expect("finite products"))
        .expect("sweep is non-empty");
    println!("\nbest product at alpha = {}", best.alpha);

    let (query_id, list) = &candidates[0];
    let blended =
        blend_and_rank(query_id, list, &BlendConfig { alpha: best.alpha, normalize: true })?;
    println!("\ntop 10 for {query_id} at that alpha:");
    for (rank, entry) in blended.entries().iter().take(10).enumerate() {
        println!(
            "  {:>2}. {}  relevance {:8.4}  fairness {:+.4}  blended {:.4}",
            rank + 1,
            entry.doc_id,
            entry.relevance,
            entry.fairness,
            entry.blended
        );
    }
    Ok(())
}
