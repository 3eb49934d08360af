//! Ranking evaluation: attention-weighted ranking fairness (AWRF),
//! binary-gain nDCG, the AWRF x nDCG combined score, and a paired t-test
//! for per-query metric comparisons.
//!
//! AWRF compares the position-discounted exposure a ranking's top k gives
//! each subgroup against a target distribution. Attention decays as
//! `1/log2(rank+1)` and is normalized to sum 1 over the scored prefix, so
//! the comparison is between distributions. The per-category similarity is
//! `1 - JSD_2(exposure, target)` with base-2 logs, which is bounded in
//! [0, 1] and handles zero components natively; AWRF averages it over
//! categories.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::exposure::target_exposure;
use crate::model::{Corpus, ExposureDistribution, Judgment, RankedList, Schema};

/// Normalized attention weights for a ranking prefix of `length` positions:
/// `1/log2(r+1)` for ranks 1..=length, scaled to sum 1. Empty for
/// `length = 0`.
pub fn attention_weights(length: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=length).map(|r| 1.0 / ((r as f64) + 1.0).log2()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Exposure each subgroup of `category` accumulates over the top
/// `min(k, len)` entries under normalized log-decay attention. Empty for an
/// empty ranking.
pub fn cumulative_exposure(
    ranking: &RankedList,
    corpus: &Corpus,
    category: &str,
    k: usize,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let top = &ranking.entries()[..ranking.len().min(k)];
    let attention = attention_weights(top.len());
    let mut exposure: Vec<f64> = Vec::new();
    for (entry, weight) in top.iter().zip(&attention) {
        let doc = corpus
            .get(&entry.doc_id)
            .ok_or_else(|| Error::UnknownDocuments(entry.doc_id.clone()))?;
        let membership = doc.membership.vector(category).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "document '{}' has no membership for category '{category}'",
                entry.doc_id
            ))
        })?;
        if exposure.is_empty() {
            exposure = vec![0.0; membership.len()];
        } else if exposure.len() != membership.len() {
            return Err(Error::DimensionMismatch(format!(
                "membership width for '{}' differs within category '{category}'",
                entry.doc_id
            )));
        }
        for (e, m) in exposure.iter_mut().zip(membership) {
            *e += weight * m;
        }
    }
    Ok(exposure)
}

/// Jensen-Shannon divergence with base-2 logs, bounded in [0, 1]. Inputs
/// are probability vectors of equal length; zero components contribute
/// nothing.
pub fn jensen_shannon_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions have {} and {} components",
            p.len(),
            q.len()
        )));
    }
    if p.iter().chain(q).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument(
            "distributions must be non-negative and finite".into(),
        ));
    }
    let half_kl = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, m)| x * (x / m).log2())
            .sum::<f64>()
            * 0.5
    };
    let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    Ok(half_kl(p, &mid) + half_kl(q, &mid))
}

/// Attention-weighted ranking fairness at cutoff `k`: the mean over
/// categories of `1 - JSD_2(cumulative exposure, target)`. Higher is
/// better; 1 means every category's exposure matches its target. An empty
/// ranking scores 0.
pub fn awrf_at_k(
    ranking: &RankedList,
    corpus: &Corpus,
    targets: &[ExposureDistribution],
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no target distributions supplied".into()));
    }
    if ranking.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for target in targets {
        let exposure = cumulative_exposure(ranking, corpus, &target.category, k)?;
        if exposure.len() != target.probabilities.len() {
            return Err(Error::DimensionMismatch(format!(
                "category '{}': exposure has {} subgroups, target has {}",
                target.category,
                exposure.len(),
                target.probabilities.len()
            )));
        }
        total += 1.0 - jensen_shannon_divergence(&exposure, &target.probabilities)?;
    }
    Ok(total / targets.len() as f64)
}

/// Binary-gain nDCG at cutoff `k`. Judgments with relevance > 0 count as
/// relevant; unjudged documents count as non-relevant; queries with no
/// relevant documents score 0.
pub fn ndcg_at_k(ranking: &RankedList, judgments: &[Judgment], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let relevant: BTreeSet<&str> = judgments
        .iter()
        .filter(|j| j.query_id == ranking.query_id && j.relevance > 0)
        .map(|j| j.doc_id.as_str())
        .collect();
    if relevant.is_empty() {
        return Ok(0.0);
    }
    let discount = |rank: usize| 1.0 / ((rank as f64) + 1.0).log2();
    let dcg: f64 = ranking
        .entries()
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, e)| relevant.contains(e.doc_id.as_str()))
        .map(|(i, _)| discount(i + 1))
        .sum();
    if dcg == 0.0 {
        // An empty float sum is IEEE -0.0; report a plain 0 instead.
        return Ok(0.0);
    }
    let ideal: f64 = (1..=relevant.len().min(k)).map(discount).sum();
    Ok(dcg / ideal)
}

/// Paired t-test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    /// t statistic with n-1 degrees of freedom.
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Two-sided paired t-test over per-query metric pairs. Zero-variance
/// differences degenerate cleanly: all-zero differences give (t=0, p=1);
/// identical nonzero differences give an infinite t reported as p=0.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTestResult { t: 0.0, p: 1.0 }
        } else {
            TTestResult { t: mean.signum() * f64::INFINITY, p: 0.0 }
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, n as f64 - 1.0)
        .map_err(|e| Error::InvalidArgument(format!("t distribution: {e}")))?;
    let p = 2.0 * dist.sf(t.abs());
    Ok(TTestResult { t, p })
}

/// Per-query evaluation row.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryEval {
    /// Query identifier.
    pub query_id: String,
    /// AWRF at the report's cutoff.
    pub awrf: f64,
    /// nDCG at the report's cutoff.
    pub ndcg: f64,
}

/// Evaluation of a whole run: per-query rows plus means and the combined
/// score.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Cutoff the metrics were computed at.
    pub k: usize,
    /// One row per query, in run order.
    pub per_query: Vec<QueryEval>,
    /// Mean AWRF over queries.
    pub mean_awrf: f64,
    /// Mean nDCG over queries.
    pub mean_ndcg: f64,
    /// mean_awrf * mean_ndcg, means taken first.
    pub product: f64,
}

/// Evaluates every ranking at cutoff `k`. Target distributions come from
/// each query's relevant documents (with corpus-level fallback). Documents
/// absent from the corpus make the run unevaluable; the error lists them.
pub fn evaluate_run(
    lists: &[RankedList],
    qrels: &[Judgment],
    corpus: &Corpus,
    schema: &Schema,
    k: usize,
) -> Result<EvalReport> {
    if lists.is_empty() {
        return Err(Error::InvalidArgument("run contains no queries".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let unknown: BTreeSet<&str> = lists
        .iter()
        .flat_map(|l| l.entries())
        .filter(|e| corpus.get(&e.doc_id).is_none())
        .map(|e| e.doc_id.as_str())
        .collect();
    if !unknown.is_empty() {
        let ids: Vec<&str> = unknown.into_iter().collect();
        return Err(Error::UnknownDocuments(ids.join(", ")));
    }
    let mut per_query = Vec::with_capacity(lists.len());
    for list in lists {
        let targets: Result<Vec<ExposureDistribution>> = schema
            .categories
            .iter()
            .map(|c| target_exposure(&list.query_id, qrels, corpus, c))
            .collect();
        let awrf = awrf_at_k(list, corpus, &targets?, k)?;
        let ndcg = ndcg_at_k(list, qrels, k)?;
        per_query.push(QueryEval { query_id: list.query_id.clone(), awrf, ndcg });
    }
    let n = per_query.len() as f64;
    let mean_awrf = per_query.iter().map(|q| q.awrf).sum::<f64>() / n;
    let mean_ndcg = per_query.iter().map(|q| q.ndcg).sum::<f64>() / n;
    Ok(EvalReport { k, per_query, mean_awrf, mean_ndcg, product: mean_awrf * mean_ndcg })
}

/// Writes an evaluation report as TSV: header `qid awrf ndcg`, one row per
/// query, and a final `all` summary row with the means.
pub fn write_eval_tsv(path: impl AsRef<Path>, report: &EvalReport) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("qid\tawrf\tndcg\n");
    for row in &report.per_query {
        out.push_str(&format!("{}\t{}\t{}\n", row.query_id, row.awrf, row.ndcg));
    }
    out.push_str(&format!("all\t{}\t{}\n", report.mean_awrf, report.mean_ndcg));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads the per-query rows of an evaluation TSV, skipping the header and
/// the `all` summary row.
pub fn read_eval_tsv(path: impl AsRef<Path>) -> Result<Vec<QueryEval>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 3 fields `qid awrf ndcg`, got {}", fields.len()),
            ));
        }
        if fields[0] == "all" {
            continue;
        }
        let awrf: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad awrf '{}'", fields[1])))?;
        let ndcg: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad ndcg '{}'", fields[2])))?;
        rows.push(QueryEval { query_id: fields[0].to_string(), awrf, ndcg });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Document, FairnessCategory, GroupMembership, RankedEntry};
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn gender() -> FairnessCategory {
        FairnessCategory::new(
            "gender",
            vec!["male".into(), "female".into(), "unknown".into()],
        )
        .unwrap()
    }

    fn doc_with(id: &str, gender_vec: Vec<f64>) -> Document {
        Document {
            doc_id: id.into(),
            text: None,
            embedding: None,
            membership: GroupMembership::from_vectors(BTreeMap::from([(
                "gender".to_string(),
                gender_vec,
            )])),
        }
    }

    fn list(qid: &str, ids: &[&str]) -> RankedList {
        RankedList::from_ordered(
            qid,
            ids.iter()
                .enumerate()
                .map(|(i, id)| RankedEntry {
                    doc_id: id.to_string(),
                    relevance: (ids.len() - i) as f64,
                    fairness: 0.0,
                    blended: (ids.len() - i) as f64,
                })
                .collect(),
        )
    }

    #[test]
    fn attention_is_positive_decreasing_and_normalized() {
        let w = attention_weights(5);
        assert_eq!(w.len(), 5);
        assert!(w.windows(2).all(|p| p[0] > p[1] && p[1] > 0.0));
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    // Two positions: raw weights 1 and 1/log2(3); normalized they are
    // 0.6131471927654584 and 0.38685280723454163.
    #[test]
    fn attention_matches_hand_computed_two_position_case() {
        let w = attention_weights(2);
        assert_abs_diff_eq!(w[0], 0.6131471927654584, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.38685280723454163, epsilon = 1e-12);
    }

    #[test]
    fn jsd_is_zero_on_identical_and_one_on_disjoint() {
        assert_abs_diff_eq!(
            jensen_shannon_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            jensen_shannon_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn jsd_matches_frozen_two_point_value() {
        let jsd = jensen_shannon_divergence(
            &[0.6131471927654584, 0.38685280723454163],
            &[0.5, 0.5],
        )
        .unwrap();
        assert_abs_diff_eq!(jsd, 0.009376049493287943, epsilon = 1e-12);
    }

    #[test]
    fn awrf_matches_hand_computed_two_document_case() {
        let corpus = Corpus::new(vec![
            doc_with("d1", vec![1.0, 0.0, 0.0]),
            doc_with("d2", vec![0.0, 1.0, 0.0]),
        ]);
        let target =
            ExposureDistribution::new("gender", vec![0.5, 0.5, 0.0]).unwrap();
        let awrf = awrf_at_k(&list("q", &["d1", "d2"]), &corpus, &[target], 2).unwrap();
        assert_abs_diff_eq!(awrf, 0.990623950506712, epsilon = 1e-9);
    }

    #[test]
    fn awrf_is_one_when_every_membership_equals_the_target() {
        let corpus = Corpus::new(vec![
            doc_with("d1", vec![0.5, 0.5, 0.0]),
            doc_with("d2", vec![0.5, 0.5, 0.0]),
            doc_with("d3", vec![0.5, 0.5, 0.0]),
        ]);
        let target = ExposureDistribution::new("gender", vec![0.5, 0.5, 0.0]).unwrap();
        let awrf = awrf_at_k(&list("q", &["d1", "d2", "d3"]), &corpus, &[target], 3).unwrap();
        assert_abs_diff_eq!(awrf, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn awrf_is_zero_for_fully_misallocated_exposure() {
        let corpus = Corpus::new(vec![
            doc_with("d1", vec![1.0, 0.0, 0.0]),
            doc_with("d2", vec![1.0, 0.0, 0.0]),
        ]);
        let target = ExposureDistribution::new("gender", vec![0.0, 1.0, 0.0]).unwrap();
        let awrf = awrf_at_k(&list("q", &["d1", "d2"]), &corpus, &[target], 2).unwrap();
        assert_abs_diff_eq!(awrf, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn awrf_ignores_order_among_identical_memberships() {
        let corpus = Corpus::new(vec![
            doc_with("d1", vec![1.0, 0.0, 0.0]),
            doc_with("d2", vec![1.0, 0.0, 0.0]),
            doc_with("d3", vec![0.0, 1.0, 0.0]),
        ]);
        let target = ExposureDistribution::new("gender", vec![0.6, 0.4, 0.0]).unwrap();
        let a = awrf_at_k(&list("q", &["d1", "d2", "d3"]), &corpus, std::slice::from_ref(&target), 3)
            .unwrap();
        let b = awrf_at_k(&list("q", &["d2", "d1", "d3"]), &corpus, &[target], 3).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn awrf_rejects_zero_k_and_unknown_documents() {
        let corpus = Corpus::new(vec![doc_with("d1", vec![1.0, 0.0, 0.0])]);
        let target = ExposureDistribution::new("gender", vec![1.0, 0.0, 0.0]).unwrap();
        assert!(awrf_at_k(&list("q", &["d1"]), &corpus, std::slice::from_ref(&target), 0).is_err());
        assert!(awrf_at_k(&list("q", &["ghost"]), &corpus, &[target], 2).is_err());
    }

    fn judgments(qid: &str, relevant: &[&str]) -> Vec<Judgment> {
        relevant
            .iter()
            .map(|d| Judgment { query_id: qid.into(), doc_id: d.to_string(), relevance: 1 })
            .collect()
    }

    #[test]
    fn ndcg_is_one_on_ideal_rankings() {
        let qrels = judgments("q", &["d1", "d2", "d3"]);
        let ndcg = ndcg_at_k(&list("q", &["d1", "d2"]), &qrels, 2).unwrap();
        assert_abs_diff_eq!(ndcg, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ndcg_is_zero_when_no_relevant_in_top_k() {
        let qrels = judgments("q", &["d9"]);
        let ndcg = ndcg_at_k(&list("q", &["d1", "d2"]), &qrels, 2).unwrap();
        assert_eq!(ndcg, 0.0);
    }

    // Pattern (0, 1, 0) with one relevant document total:
    // DCG = 1/log2(3), IDCG = 1, nDCG = 0.6309297535714575.
    #[test]
    fn ndcg_matches_hand_computed_pattern()  {
        let qrels = judgments("q", &["d2"]);
        let ndcg = ndcg_at_k(&list("q", &["d1", "d2", "d3"]), &qrels, 3).unwrap();
        assert_abs_diff_eq!(ndcg, 0.6309297535714575, epsilon = 1e-12);
    }

    #[test]
    fn ndcg_without_any_relevant_documents_is_zero() {
        let ndcg = ndcg_at_k(&list("q", &["d1"]), &[], 5).unwrap();
        assert_eq!(ndcg, 0.0);
    }

    #[test]
    fn ndcg_drops_when_a_relevant_document_moves_down() {
        let qrels = judgments("q", &["d1"]);
        let high = ndcg_at_k(&list("q", &["d1", "d2", "d3"]), &qrels, 3).unwrap();
        let low = ndcg_at_k(&list("q", &["d2", "d1", "d3"]), &qrels, 3).unwrap();
        assert!(low < high);
    }

    #[test]
    fn t_test_matches_frozen_hand_computation() {
        // Differences (0.1, -0.2, 0.3, 0.0, 0.2): mean 0.08, sd 0.192354,
        // t = mean / (sd/sqrt(5)).
        let a = [0.1, -0.2, 0.3, 0.0, 0.2];
        let b = [0.0; 5];
        let r = paired_t_test(&a, &b).unwrap();
        assert_abs_diff_eq!(r.t, 0.9299811099505543, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p, 0.4050233143090604, epsilon = 1e-9);
    }

    #[test]
    fn identical_samples_give_t_zero_p_one() {
        let a = [0.4, 0.5, 0.6];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn constant_nonzero_differences_give_vanishing_p() {
        let a = [1.0, 1.0, 1.0, 1.0];
        let b = [0.0, 0.0, 0.0, 0.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert!(r.t.is_infinite() && r.t > 0.0);
        assert!(r.p < 1e-12);
    }

    #[test]
    fn t_statistic_is_antisymmetric() {
        let a = [0.9, 0.8, 0.7, 0.95];
        let b = [0.85, 0.82, 0.65, 0.9];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_abs_diff_eq!(ab.t, -ba.t, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.p, ba.p, epsilon = 1e-12);
    }

    #[test]
    fn t_test_rejects_mismatched_or_tiny_samples() {
        assert!(paired_t_test(&[1.0], &[1.0, 2.0]).is_err());
        assert!(paired_t_test(&[1.0], &[1.0]).is_err());
    }

    fn eval_fixture() -> (Vec<RankedList>, Vec<Judgment>, Corpus, Schema) {
        let corpus = Corpus::new(vec![
            doc_with("d1", vec![1.0, 0.0, 0.0]),
            doc_with("d2", vec![0.0, 1.0, 0.0]),
            doc_with("d3", vec![1.0, 0.0, 0.0]),
        ]);
        let schema = Schema::new(vec![gender()]).unwrap();
        let qrels = [judgments("q1", &["d1", "d2"]), judgments("q2", &["d3"])].concat();
        let lists = vec![list("q1", &["d1", "d2", "d3"]), list("q2", &["d3", "d1"])];
        (lists, qrels, corpus, schema)
    }

    #[test]
    fn evaluate_run_aggregates_means_first() {
        let (lists, qrels, corpus, schema) = eval_fixture();
        let report = evaluate_run(&lists, &qrels, &corpus, &schema, 2).unwrap();
        assert_eq!(report.per_query.len(), 2);
        let mean_awrf =
            (report.per_query[0].awrf + report.per_query[1].awrf) / 2.0;
        let mean_ndcg =
            (report.per_query[0].ndcg + report.per_query[1].ndcg) / 2.0;
        assert_abs_diff_eq!(report.mean_awrf, mean_awrf, epsilon = 1e-15);
        assert_abs_diff_eq!(report.mean_ndcg, mean_ndcg, epsilon = 1e-15);
        assert_abs_diff_eq!(report.product, mean_awrf * mean_ndcg, epsilon = 1e-15);
    }

    #[test]
    fn evaluating_twice_is_identical() {
        let (lists, qrels, corpus, schema) = eval_fixture();
        let a = evaluate_run(&lists, &qrels, &corpus, &schema, 2).unwrap();
        let b = evaluate_run(&lists, &qrels, &corpus, &schema, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_documents_are_listed_in_the_error() {
        let (mut lists, qrels, corpus, schema) = eval_fixture();
        lists.push(list("q3", &["ghost1", "ghost2"]));
        let err = evaluate_run(&lists, &qrels, &corpus, &schema, 2).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("ghost1") && message.contains("ghost2"), "got: {message}");
    }

    #[test]
    fn eval_tsv_roundtrips_per_query_rows() {
        let (lists, qrels, corpus, schema) = eval_fixture();
        let report = evaluate_run(&lists, &qrels, &corpus, &schema, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.tsv");
        write_eval_tsv(&path, &report).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("qid\tawrf\tndcg\n"));
        assert!(text.lines().last().unwrap().starts_with("all\t"));
        let rows = read_eval_tsv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].query_id, "q1");
        assert_abs_diff_eq!(rows[0].awrf, report.per_query[0].awrf, epsilon = 0.0);
        assert_abs_diff_eq!(rows[1].ndcg, report.per_query[1].ndcg, epsilon = 0.0);
    }
}
