//! The two reference rerankers: random shuffling and MMR diversification.
//!
//! Retrieves BM25 candidates over a small corpus, then reorders them with a
//! seeded random permutation (the floor any useful reranker must beat) and
//! with maximal marginal relevance at two lambda settings, using TF-IDF
//! cosine similarity between documents for the redundancy penalty.
//!
//! Run with `cargo run --example baseline_rerankers`.

use fairrank::baselines::{mmr_rerank, random_rerank, TfidfVectors};
use fairrank::model::{Corpus, Document, GroupMembership, Query};
use fairrank::retrieval::{bm25_search, Bm25Params, InvertedIndex};

fn doc(id: &str, text: &str) -> Document {
    Document {
        doc_id: id.to_string(),
        text: Some(text.to_string()),
        embedding: None,
        membership: GroupMembership::from_vectors(Default::default()),
    }
}

fn main() -> fairrank::Result<()> {
    let corpus = Corpus::new(vec![
        doc("d1", "solar panels on rooftops generate clean electricity"),
        doc("d2", "rooftop solar panels generate electricity for homes"),
        doc("d3", "wind turbines generate electricity offshore"),
        doc("d4", "geothermal plants generate steady baseload electricity"),
        doc("d5", "solar panel installation costs keep falling"),
        doc("d6", "electricity prices rise during peak demand"),
    ]);
    let index = InvertedIndex::build(&corpus);
    let query = Query { query_id: "q1".into(), text: "solar electricity".into() };
    let top = bm25_search(&index, &query, 6, &Bm25Params::default())?;
    let candidates: Vec<(String, f64)> =
        top.entries().iter().map(|e| (e.doc_id.clone(), e.blended)).collect();

    println!("bm25 order:");
    for (rank, (id, score)) in candidates.iter().enumerate() {
        println!("  {:>2}. {id}  {score:.4}", rank + 1);
    }

    let shuffled = random_rerank("q1", &candidates, 42);
    println!("\nrandom permutation (seed 42):");
    for (rank, entry) in shuffled.entries().iter().enumerate() {
        println!("  {:>2}. {}", rank + 1, entry.doc_id);
    }

    let vectors = TfidfVectors::build(&corpus, &index);
    println!(
        "\ncosine(d1, d2) = {:.4}, cosine(d1, d4) = {:.4}",
        vectors.cosine("d1", "d2")?,
        vectors.cosine("d1", "d4")?
    );

    for lambda in [1.0, 0.5] {
        let reranked = mmr_rerank("q1", &candidates, &vectors, lambda, 6)?;
        println!("\nmmr order at lambda {lambda} (lower lambda pushes near-duplicates down):");
        for (rank, entry) in reranked.entries().iter().enumerate() {
            println!("  {:>2}. {}  {:.4}", rank + 1, entry.doc_id, entry.blended);
        }
    }
    Ok(())
}
