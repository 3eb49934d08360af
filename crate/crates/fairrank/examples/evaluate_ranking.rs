//! The evaluation metrics on a worked four-document example.
//!
//! Walks through AWRF step by step (attention weights, cumulative subgroup
//! exposure, Jensen-Shannon divergence against a target) and binary nDCG on
//! the same ranking, then compares two runs with a paired t-test.
//!
//! Run with `cargo run --example evaluate_ranking`.

use fairrank::evaluation::{
    attention_weights, awrf_at_k, cumulative_exposure, jensen_shannon_divergence, ndcg_at_k,
    paired_t_test,
};
use fairrank::model::{
    Corpus, Document, ExposureDistribution, FairnessCategory, GroupMembership, Judgment,
    RankedEntry, RankedList, Schema,
};

fn doc(id: &str, schema: &Schema, subgroup: &str) -> fairrank::Result<Document> {
    Ok(Document {
        doc_id: id.to_string(),
        text: None,
        embedding: None,
        membership: GroupMembership::one_hot(schema, "gender", subgroup)?,
    })
}

fn ranking(query_id: &str, doc_ids: &[&str]) -> RankedList {
    let n = doc_ids.len() as f64;
    RankedList::from_ordered(
        query_id,
        doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| RankedEntry {
                doc_id: id.to_string(),
                relevance: n - i as f64,
                fairness: 0.0,
                blended: n - i as f64,
            })
            .collect(),
    )
}

fn main() -> fairrank::Result<()> {
    let schema = Schema::new(vec![FairnessCategory::new(
        "gender",
        vec!["women".into(), "men".into(), "unknown".into()],
    )?])?;
    let corpus = Corpus::new(vec![
        doc("d1", &schema, "men")?,
        doc("d2", &schema, "women")?,
        doc("d3", &schema, "men")?,
        doc("d4", &schema, "women")?,
    ]);

    let list = ranking("q1", &["d1", "d2", "d3", "d4"]);
    println!("ranking: d1(men) d2(women) d3(men) d4(women)");

    let attention = attention_weights(4);
    println!("\nattention weights over 4 ranks:");
    for (rank, w) in attention.iter().enumerate() {
        println!("  rank {}: {w:.6}", rank + 1);
    }

    let exposure = cumulative_exposure(&list, &corpus, "gender", 4)?;
    println!("\ncumulative exposure (women, men, unknown): {exposure:?}");

    let target =
        ExposureDistribution::new("gender", vec![0.5, 0.5, 0.0])?;
    let jsd = jensen_shannon_divergence(&exposure, &target.probabilities)?;
    println!("divergence from the 50/50 target: {jsd:.6}");

    let awrf = awrf_at_k(&list, &corpus, &[target], 4)?;
    println!("awrf@4 = 1 - divergence = {awrf:.6}");

    let qrels = vec![
        Judgment { query_id: "q1".into(), doc_id: "d2".into(), relevance: 1 },
        Judgment { query_id: "q1".into(), doc_id: "d3".into(), relevance: 1 },
    ];
    let ndcg = ndcg_at_k(&list, &qrels, 4)?;
    println!("\nrelevant docs are d2 and d3, ranked 2nd and 3rd: ndcg@4 = {ndcg:.6}");
    let ideal = ranking("q1", &["d2", "d3", "d1", "d4"]);
    println!("ideal ordering scores ndcg@4 = {:.6}", ndcg_at_k(&ideal, &qrels, 4)?);

    let run_a = [0.62, 0.55, 0.71, 0.48, 0.66];
    let run_b = [0.58, 0.49, 0.64, 0.47, 0.61];
    let result = paired_t_test(&run_a, &run_b)?;
    println!(
        "\npaired t-test over 5 per-query scores: t = {:.4}, p = {:.4}",
        result.t, result.p
    );
    Ok(())
}
