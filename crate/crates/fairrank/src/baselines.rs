//! Reference re-rankers: a seeded uniform-random permutation and maximal
//! marginal relevance (MMR) diversification over TF-IDF document vectors.
//!
//! Both consume a candidate list of (doc_id, relevance score) pairs, as read
//! from a run file, and emit a re-ordered ranking whose written scores are
//! positional (n, n-1, ...) so the new order survives run-file round trips.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blend::min_max_normalize;
use crate::error::{Error, Result};
use crate::model::{Corpus, RankedEntry, RankedList};
use crate::retrieval::{tokenize, InvertedIndex};

fn positional_list(query_id: &str, picked: Vec<(String, f64)>) -> RankedList {
    let n = picked.len();
    let entries = picked
        .into_iter()
        .enumerate()
        .map(|(i, (doc_id, relevance))| RankedEntry {
            doc_id,
            relevance,
            fairness: 0.0,
            blended: (n - i) as f64,
        })
        .collect();
    RankedList::from_ordered(query_id, entries)
}

/// Shuffles the candidates into a uniform random permutation drawn from a
/// ChaCha8 stream seeded with `seed`. Same seed, same permutation.
pub fn random_rerank(query_id: &str, candidates: &[(String, f64)], seed: u64) -> RankedList {
    let mut picked: Vec<(String, f64)> = candidates.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    picked.shuffle(&mut rng);
    positional_list(query_id, picked)
}

/// Sparse unit-length TF-IDF vectors, weight `tf * ln(N/df)`, for every
/// document the index covers.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfVectors {
    vectors: BTreeMap<String, BTreeMap<String, f64>>,
}

impl TfidfVectors {
    /// Vectorizes every document with text, reusing the index's collection
    /// statistics. Documents whose every term appears in all documents get a
    /// zero vector (their idf weights all vanish).
    pub fn build(corpus: &Corpus, index: &InvertedIndex) -> Self {
        let n = index.num_documents() as f64;
        let mut vectors = BTreeMap::new();
        for doc in corpus.documents() {
            let Some(text) = &doc.text else { continue };
            if vectors.contains_key(&doc.doc_id) {
                continue;
            }
            let mut weights: BTreeMap<String, f64> = BTreeMap::new();
            for token in tokenize(text) {
                *weights.entry(token).or_insert(0.0) += 1.0;
            }
            for (term, weight) in weights.iter_mut() {
                let df = index.document_frequency(term) as f64;
                *weight *= if df > 0.0 { (n / df).ln() } else { 0.0 };
            }
            let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for weight in weights.values_mut() {
                    *weight /= norm;
                }
            }
            vectors.insert(doc.doc_id.clone(), weights);
        }
        TfidfVectors { vectors }
    }

    /// Sparse vector for a document, if it was vectorized.
    pub fn get(&self, doc_id: &str) -> Option<&BTreeMap<String, f64>> {
        self.vectors.get(doc_id)
    }

    /// Cosine similarity between two vectorized documents. Vectors are unit
    /// length, so this is their sparse dot product; zero vectors yield 0.
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        let va = self.require(a)?;
        let vb = self.require(b)?;
        let (small, large) = if va.len() <= vb.len() { (va, vb) } else { (vb, va) };
        Ok(small
            .iter()
            .filter_map(|(term, w)| large.get(term).map(|x| w * x))
            .sum())
    }

    fn require(&self, doc_id: &str) -> Result<&BTreeMap<String, f64>> {
        self.get(doc_id).ok_or_else(|| {
            Error::InvalidArgument(format!("no TF-IDF vector for document '{doc_id}'"))
        })
    }
}

/// Greedy MMR re-ranking: repeatedly picks the candidate maximizing
/// `lambda * R - (1 - lambda) * max cosine to the already-selected`, with
/// relevance min-max normalized over the candidate list and ties broken by
/// ascending document id. The first pick is the pure relevance argmax.
/// Selects at most `k` documents.
pub fn mmr_rerank(
    query_id: &str,
    candidates: &[(String, f64)],
    vectors: &TfidfVectors,
    lambda: f64,
    k: usize,
) -> Result<RankedList> {
    if !lambda.is_finite() || !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    for (doc_id, _) in candidates {
        vectors.require(doc_id)?;
    }
    let normalized = min_max_normalize(
        &candidates.iter().map(|(_, r)| *r).collect::<Vec<f64>>(),
    );
    let mut remaining: Vec<(&str, f64, f64)> = candidates
        .iter()
        .zip(&normalized)
        .map(|((id, raw), norm)| (id.as_str(), *raw, *norm))
        .collect();
    let mut picked: Vec<(String, f64)> = Vec::new();
    let mut selected_ids: Vec<&str> = Vec::new();
    while picked.len() < k && !remaining.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (i, (doc_id, _, norm)) in remaining.iter().enumerate() {
            let mut max_sim = 0.0f64;
            for s in &selected_ids {
                max_sim = max_sim.max(vectors.cosine(doc_id, s)?);
            }
            let objective = if selected_ids.is_empty() {
                *norm
            } else {
                lambda * norm - (1.0 - lambda) * max_sim
            };
            let better = match best {
                None => true,
                Some((bi, bv)) => {
                    objective > bv || (objective == bv && *doc_id < remaining[bi].0)
                }
            };
            if better {
                best = Some((i, objective));
            }
        }
        let (index, _) = best.expect("remaining is non-empty");
        let (doc_id, raw, _) = remaining.remove(index);
        selected_ids.push(doc_id);
        picked.push((doc_id.to_string(), raw));
    }
    Ok(positional_list(query_id, picked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Document, GroupMembership};
    use std::collections::BTreeMap as Map;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            text: Some(text.into()),
            embedding: None,
            membership: GroupMembership::from_vectors(Map::new()),
        }
    }

    fn ids(list: &RankedList) -> Vec<&str> {
        list.entries().iter().map(|e| e.doc_id.as_str()).collect()
    }

    fn three_candidates() -> Vec<(String, f64)> {
        vec![("d1".into(), 3.0), ("d2".into(), 2.0), ("d3".into(), 1.0)]
    }

    #[test]
    fn same_seed_gives_identical_permutation() {
        let candidates = three_candidates();
        let a = random_rerank("q", &candidates, 42);
        let b = random_rerank("q", &candidates, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn single_candidate_is_unchanged() {
        let list = random_rerank("q", &[("only".into(), 1.0)], 9);
        assert_eq!(ids(&list), vec!["only"]);
    }

    #[test]
    fn shuffle_preserves_the_candidate_set() {
        let candidates = three_candidates();
        let list = random_rerank("q", &candidates, 7);
        let mut got = ids(&list);
        got.sort_unstable();
        assert_eq!(got, vec!["d1", "d2", "d3"]);
    }

    #[test]
    fn positional_scores_descend_from_n() {
        let list = random_rerank("q", &three_candidates(), 5);
        let scores: Vec<f64> = list.entries().iter().map(|e| e.blended).collect();
        assert_eq!(scores, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn permutations_are_uniform_over_many_seeds() {
        let candidates = three_candidates();
        let mut counts: Map<Vec<String>, u32> = Map::new();
        let trials = 10_000;
        for seed in 0..trials {
            let list = random_rerank("q", &candidates, seed);
            let key: Vec<String> =
                list.entries().iter().map(|e| e.doc_id.clone()).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        for count in counts.values() {
            let frequency = f64::from(*count) / trials as f64;
            assert!(
                (frequency - 1.0 / 6.0).abs() < 0.02,
                "permutation frequency {frequency} outside 1/6 +- 0.02"
            );
        }
    }

    fn vectorize(docs: &[(&str, &str)]) -> (Corpus, TfidfVectors) {
        let corpus = Corpus::new(docs.iter().map(|(id, text)| doc(id, text)).collect());
        let index = InvertedIndex::build(&corpus);
        let vectors = TfidfVectors::build(&corpus, &index);
        (corpus, vectors)
    }

    #[test]
    fn tfidf_vectors_have_unit_norm() {
        let (_, vectors) = vectorize(&[("d1", "apple banana"), ("d2", "banana cherry")]);
        for id in ["d1", "d2"] {
            let norm: f64 =
                vectors.get(id).unwrap().values().map(|w| w * w).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "norm of {id} is {norm}");
        }
    }

    #[test]
    fn cosine_is_one_for_identical_texts_and_zero_for_disjoint() {
        let (_, vectors) = vectorize(&[
            ("d1", "apple banana"),
            ("d2", "apple banana"),
            ("d3", "cherry durian"),
        ]);
        assert!((vectors.cosine("d1", "d2").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(vectors.cosine("d1", "d3").unwrap(), 0.0);
    }

    #[test]
    fn lambda_one_reproduces_relevance_ordering() {
        let (_, vectors) = vectorize(&[
            ("d1", "apple banana"),
            ("d2", "apple cherry"),
            ("d3", "durian eggplant"),
        ]);
        let candidates =
            vec![("d2".to_string(), 5.0), ("d1".to_string(), 9.0), ("d3".to_string(), 7.0)];
        let list = mmr_rerank("q", &candidates, &vectors, 1.0, 10).unwrap();
        assert_eq!(ids(&list), vec!["d1", "d3", "d2"]);
    }

    // With d1 and d2 sharing identical vectors, after d1 is picked the
    // duplicate's objective is 0.5*0.5 - 0.5*1 = -0.25 while the disjoint
    // d3 scores 0.5*0 - 0.5*0 = 0, so the distinct document goes second.
    #[test]
    fn duplicate_document_is_deferred_in_favor_of_distinct_one() {
        let (_, vectors) = vectorize(&[
            ("d1", "apple banana"),
            ("d2", "apple banana"),
            ("d3", "cherry durian"),
        ]);
        let candidates =
            vec![("d1".to_string(), 3.0), ("d2".to_string(), 2.0), ("d3".to_string(), 1.0)];
        let list = mmr_rerank("q", &candidates, &vectors, 0.5, 3).unwrap();
        assert_eq!(ids(&list), vec!["d1", "d3", "d2"]);
    }

    #[test]
    fn k_one_returns_the_relevance_argmax() {
        let (_, vectors) = vectorize(&[("d1", "apple"), ("d2", "banana")]);
        let candidates = vec![("d1".to_string(), 1.0), ("d2".to_string(), 4.0)];
        let list = mmr_rerank("q", &candidates, &vectors, 0.5, 1).unwrap();
        assert_eq!(ids(&list), vec!["d2"]);
    }

    #[test]
    fn equal_similarities_preserve_relevance_order() {
        let (_, vectors) = vectorize(&[
            ("d1", "same text"),
            ("d2", "same text"),
            ("d3", "same text"),
        ]);
        let candidates =
            vec![("d1".to_string(), 2.0), ("d2".to_string(), 8.0), ("d3".to_string(), 5.0)];
        let list = mmr_rerank("q", &candidates, &vectors, 0.3, 3).unwrap();
        assert_eq!(ids(&list), vec!["d2", "d3", "d1"]);
    }

    #[test]
    fn output_is_a_duplicate_free_subset_of_length_min_k_n() {
        let (_, vectors) = vectorize(&[
            ("d1", "alpha beta"),
            ("d2", "beta gamma"),
            ("d3", "gamma delta"),
            ("d4", "delta epsilon"),
        ]);
        let candidates: Vec<(String, f64)> =
            (1..=4).map(|i| (format!("d{i}"), i as f64)).collect();
        let list = mmr_rerank("q", &candidates, &vectors, 0.5, 2).unwrap();
        assert_eq!(list.len(), 2);
        let mut got = ids(&list);
        got.sort_unstable();
        got.dedup();
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn missing_vector_and_bad_lambda_are_rejected() {
        let (_, vectors) = vectorize(&[("d1", "apple")]);
        let candidates = vec![("ghost".to_string(), 1.0)];
        assert!(mmr_rerank("q", &candidates, &vectors, 0.5, 2).is_err());
        let ok = vec![("d1".to_string(), 1.0)];
        assert!(mmr_rerank("q", &ok, &vectors, 1.5, 2).is_err());
        assert!(mmr_rerank("q", &ok, &vectors, 0.5, 0).is_err());
    }
}
