//! BM25 and RM3 retrieval over a small hand-built corpus.
//!
//! Builds an inverted index from eight documents, runs a plain BM25 search,
//! then expands the same query with RM3 pseudo-relevance feedback and shows
//! how the expanded term weights reshape the ranking.
//!
//! Run with `cargo run --example bm25_search`.

use fairrank::model::{Corpus, Document, GroupMembership, Query};
use fairrank::retrieval::{bm25_search, rm3_expand, rm3_search, Bm25Params, InvertedIndex, Rm3Params};

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
        doc("d1", "solar panels convert sunlight into electricity"),
        doc("d2", "wind turbines convert wind into electricity"),
        doc("d3", "solar farms cover large fields with panels"),
        doc("d4", "the history of the electric grid"),
        doc("d5", "rooftop solar cuts household electricity bills"),
        doc("d6", "electricity storage with grid scale batteries"),
        doc("d7", "cooking recipes for a summer picnic"),
        doc("d8", "panels of experts discussed the energy transition"),
    ]);
    let index = InvertedIndex::build(&corpus);
    println!(
        "index: {} documents, {} distinct terms, average length {:.2}",
        index.num_documents(),
        index.num_terms(),
        index.avg_doc_length()
    );

    let query = Query { query_id: "q1".into(), text: "solar electricity".into() };
    let bm25 = Bm25Params::default();

    println!("\nbm25 top 5 for '{}':", query.text);
    let plain = bm25_search(&index, &query, 5, &bm25)?;
    for (rank, entry) in plain.entries().iter().enumerate() {
        println!("  {:>2}. {}  score {:.4}", rank + 1, entry.doc_id, entry.blended);
    }

    let rm3 = Rm3Params::default();
    let expanded = rm3_expand(&index, &query, &rm3, &bm25)?;
    println!("\nrm3 expanded query ({} terms, original weight {}):", expanded.len(), rm3.mix);
    for (term, weight) in &expanded {
        println!("  {term:<12} {weight:.4}");
    }

    println!("\nrm3 top 5:");
    let reranked = rm3_search(&index, &query, 5, &rm3, &bm25)?;
    for (rank, entry) in reranked.entries().iter().enumerate() {
        println!("  {:>2}. {}  score {:.4}", rank + 1, entry.doc_id, entry.blended);
    }
    Ok(())
}
