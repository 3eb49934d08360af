//! Lexical retrieval: tokenization, an in-memory inverted index, BM25
//! scoring, RM3 pseudo-relevance-feedback expansion, and TREC run file I/O.
//!
//! Scoring uses the non-negative idf variant
//! `idf(t) = ln((N - df + 0.5)/(df + 0.5) + 1)` with the usual saturated
//! term-frequency part `tf*(k1+1)/(tf + k1*(1 - b + b*dl/avgdl))`. The
//! weighted-query generalization multiplies each term's contribution by its
//! query weight, which is what RM3 re-scoring relies on.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Corpus, Query, RankedEntry, RankedList};

/// Lowercases and splits on non-alphanumeric characters, dropping empty
/// tokens. No stemming, no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Token counts of a text, in first-appearance order flattened to a sorted
/// map.
fn term_counts(text: &str) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for token in tokenize(text) {
        *counts.entry(token).or_insert(0) += 1;
    }
    counts
}

/// BM25 free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    /// Term-frequency saturation.
    pub k1: f64,
    /// Length normalization strength in [0, 1].
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    fn validate(&self) -> Result<()> {
        if !self.k1.is_finite() || self.k1 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "k1 must be finite and >= 0, got {}",
                self.k1
            )));
        }
        if !self.b.is_finite() || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// RM3 expansion parameters. `mix` is the weight kept on the original query
/// distribution; `1 - mix` goes to the feedback distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rm3Params {
    /// Number of feedback documents.
    pub fb_docs: usize,
    /// Number of feedback terms kept.
    pub fb_terms: usize,
    /// Interpolation weight on the original query, in [0, 1].
    pub mix: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Rm3Params { fb_docs: 10, fb_terms: 10, mix: 0.5 }
    }
}

impl Rm3Params {
    fn validate(&self) -> Result<()> {
        if !self.mix.is_finite() || !(0.0..=1.0).contains(&self.mix) {
            return Err(Error::InvalidArgument(format!(
                "mix must lie in [0, 1], got {}",
                self.mix
            )));
        }
        Ok(())
    }
}

/// In-memory inverted index with postings sorted by document id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<(String, u32)>>,
    doc_lengths: BTreeMap<String, u32>,
    total_tokens: u64,
    skipped_no_text: usize,
}

impl InvertedIndex {
    /// Indexes every document with text; documents without text are skipped
    /// and counted. Duplicate document ids keep the first occurrence,
    /// matching corpus lookup.
    pub fn build(corpus: &Corpus) -> Self {
        let mut postings: BTreeMap<String, Vec<(String, u32)>> = BTreeMap::new();
        let mut doc_lengths = BTreeMap::new();
        let mut total_tokens = 0u64;
        let mut skipped_no_text = 0usize;
        for doc in corpus.documents() {
            let Some(text) = &doc.text else {
                skipped_no_text += 1;
                continue;
            };
            if doc_lengths.contains_key(&doc.doc_id) {
                continue;
            }
            let counts = term_counts(text);
            let length: u32 = counts.values().sum();
            doc_lengths.insert(doc.doc_id.clone(), length);
            total_tokens += u64::from(length);
            for (term, tf) in counts {
                postings.entry(term).or_default().push((doc.doc_id.clone(), tf));
            }
        }
        for list in postings.values_mut() {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        InvertedIndex { postings, doc_lengths, total_tokens, skipped_no_text }
    }

    /// Number of indexed documents.
    pub fn num_documents(&self) -> usize {
        self.doc_lengths.len()
    }

    /// Mean indexed document length in tokens; 0 for an empty index.
    pub fn avg_doc_length(&self) -> f64 {
        if self.doc_lengths.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.doc_lengths.len() as f64
        }
    }

    /// Number of indexed documents containing the term.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Distinct terms in the index.
    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    /// Documents skipped during the build because they had no text.
    pub fn skipped_documents(&self) -> usize {
        self.skipped_no_text
    }

    /// Serializes the index as JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)
            .map_err(|e| Error::InvalidArgument(format!("index serialization failed: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Loads an index written by [`InvertedIndex::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, format!("bad index: {e}")))
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.num_documents() as f64;
        let df = self.document_frequency(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }
}

/// Scores the query's token bag against the index and returns the top `k`
/// documents, descending by score with ties broken by ascending document id.
/// Only documents containing at least one query term appear.
pub fn bm25_search(
    index: &InvertedIndex,
    query: &Query,
    k: usize,
    params: &Bm25Params,
) -> Result<RankedList> {
    let weighted: Vec<(String, f64)> =
        term_counts(&query.text).into_iter().map(|(t, c)| (t, f64::from(c))).collect();
    bm25_search_weighted(index, &query.query_id, &weighted, k, params)
}

/// Weighted-query BM25: each term's score contribution is multiplied by its
/// weight. Terms with non-positive weight are ignored.
pub fn bm25_search_weighted(
    index: &InvertedIndex,
    query_id: &str,
    terms: &[(String, f64)],
    k: usize,
    params: &Bm25Params,
) -> Result<RankedList> {
    params.validate()?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let avgdl = index.avg_doc_length();
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for (term, weight) in terms {
        if *weight <= 0.0 {
            continue;
        }
        let Some(postings) = index.postings.get(term) else { continue };
        let idf = index.idf(term);
        for (doc_id, tf) in postings {
            let tf = f64::from(*tf);
            let dl = f64::from(index.doc_lengths[doc_id]);
            let norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
            let contribution = idf * tf * (params.k1 + 1.0) / (tf + norm);
            *scores.entry(doc_id).or_insert(0.0) += weight * contribution;
        }
    }
    let mut ranked: Vec<(&str, f64)> = scores.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(b.0))
    });
    ranked.truncate(k);
    let entries = ranked
        .into_iter()
        .map(|(doc_id, score)| RankedEntry {
            doc_id: doc_id.to_string(),
            relevance: score,
            fairness: 0.0,
            blended: score,
        })
        .collect();
    Ok(RankedList::from_ordered(query_id, entries))
}

/// Expands the query with RM3: BM25 retrieves `fb_docs` feedback documents,
/// a feedback term distribution is estimated from them by length-normalized
/// term frequency weighted by document score, the top `fb_terms` of it are
/// kept and renormalized, and the result is interpolated with the original
/// query distribution at weight `mix` on the original. Returns the expanded
/// weighted query sorted by term. When feedback retrieves nothing (or is
/// disabled by `fb_docs = 0` / `fb_terms = 0` at `mix > 0`) the original
/// distribution is returned unchanged.
pub fn rm3_expand(
    index: &InvertedIndex,
    query: &Query,
    rm3: &Rm3Params,
    bm25: &Bm25Params,
) -> Result<Vec<(String, f64)>> {
    rm3.validate()?;
    bm25.validate()?;
    let counts = term_counts(&query.text);
    let total: f64 = f64::from(counts.values().sum::<u32>());
    let original: Vec<(String, f64)> =
        counts.into_iter().map(|(t, c)| (t, f64::from(c) / total.max(1.0))).collect();
    if rm3.fb_docs == 0 || rm3.fb_terms == 0 || original.is_empty() {
        return Ok(original);
    }

    let initial = bm25_search_weighted(index, &query.query_id, &original, rm3.fb_docs, bm25)?;
    if initial.is_empty() {
        return Ok(original);
    }
    let doc_scores: BTreeMap<&str, f64> =
        initial.entries().iter().map(|e| (e.doc_id.as_str(), e.blended)).collect();

    let mut feedback: BTreeMap<&str, f64> = BTreeMap::new();
    for (term, postings) in &index.postings {
        for (doc_id, tf) in postings {
            if let Some(score) = doc_scores.get(doc_id.as_str()) {
                let dl = f64::from(index.doc_lengths[doc_id]);
                *feedback.entry(term).or_insert(0.0) += f64::from(*tf) / dl * score;
            }
        }
    }
    let mut top: Vec<(&str, f64)> = feedback.into_iter().collect();
    top.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(b.0))
    });
    top.truncate(rm3.fb_terms);
    let mass: f64 = top.iter().map(|(_, w)| w).sum();

    let mut mixed: BTreeMap<String, f64> = BTreeMap::new();
    for (term, weight) in &original {
        *mixed.entry(term.clone()).or_insert(0.0) += rm3.mix * weight;
    }
    if mass > 0.0 {
        for (term, weight) in top {
            *mixed.entry(term.to_string()).or_insert(0.0) += (1.0 - rm3.mix) * weight / mass;
        }
    }
    Ok(mixed.into_iter().collect())
}

/// RM3 retrieval: expand, then score the expanded weighted query.
pub fn rm3_search(
    index: &InvertedIndex,
    query: &Query,
    k: usize,
    rm3: &Rm3Params,
    bm25: &Bm25Params,
) -> Result<RankedList> {
    let expanded = rm3_expand(index, query, rm3, bm25)?;
    bm25_search_weighted(index, &query.query_id, &expanded, k, bm25)
}

/// Writes rankings in TREC run format: `qid Q0 docid rank score tag`, ranks
/// starting at 1, scores printed at full precision.
pub fn write_run(path: impl AsRef<Path>, lists: &[RankedList], tag: &str) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for list in lists {
        for (i, entry) in list.entries().iter().enumerate() {
            out.push_str(&format!(
                "{} Q0 {} {} {} {tag}\n",
                list.query_id,
                entry.doc_id,
                i + 1,
                entry.blended
            ));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a TREC run file, grouping rows by query in first-appearance order
/// and trusting the file's row order within each query. Scores populate both
/// the relevance and ordering fields.
pub fn read_run(path: impl AsRef<Path>) -> Result<Vec<RankedList>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<RankedEntry>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 6 fields `qid Q0 docid rank score tag`, got {}", fields.len()),
            ));
        }
        fields[3]
            .parse::<usize>()
            .map_err(|_| Error::parse(path, i + 1, format!("bad rank '{}'", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad score '{}'", fields[4])))?;
        let qid = fields[0].to_string();
        if !grouped.contains_key(&qid) {
            order.push(qid.clone());
        }
        grouped.entry(qid).or_default().push(RankedEntry {
            doc_id: fields[2].to_string(),
            relevance: score,
            fairness: 0.0,
            blended: score,
        });
    }
    Ok(order
        .into_iter()
        .map(|qid| {
            let entries = grouped.remove(&qid).unwrap_or_default();
            RankedList::from_ordered(qid, entries)
        })
        .collect())
}
