//! Core data model: fairness categories, group memberships, documents,
//! queries, judgments, ranked lists, and the file formats that carry them.
//!
//! Membership vectors are normalized at ingestion: raw weights summing to
//! `s > 0` are divided by `s`, and an all-zero (or absent) annotation maps to
//! full mass on the category's catch-all `unknown` subgroup.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "sums to one" checks on probability vectors.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// One protected attribute: an ordered list of subgroup names whose last
/// entry is the catch-all `"unknown"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessCategory {
    /// Category name, e.g. `gender`.
    pub name: String,
    /// Ordered subgroup names; membership vectors align with this order.
    pub subgroups: Vec<String>,
}

impl FairnessCategory {
    /// Builds a category, enforcing the structural invariants: at least two
    /// subgroups, unique names, and `"unknown"` in last position.
    pub fn new(name: impl Into<String>, subgroups: Vec<String>) -> Result<Self> {
        let name = name.into();
        if subgroups.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "category '{name}' needs at least 2 subgroups, got {}",
                subgroups.len()
            )));
        }
        if subgroups.last().map(String::as_str) != Some("unknown") {
            return Err(Error::InvalidArgument(format!(
                "category '{name}' must list 'unknown' as its last subgroup"
            )));
        }
        let unique: BTreeSet<&String> = subgroups.iter().collect();
        if unique.len() != subgroups.len() {
            return Err(Error::InvalidArgument(format!(
                "category '{name}' has duplicate subgroup names"
            )));
        }
        Ok(FairnessCategory { name, subgroups })
    }

    /// Number of subgroups (including `unknown`).
    pub fn len(&self) -> usize {
        self.subgroups.len()
    }

    /// True when the category has no subgroups (never for validated values).
    pub fn is_empty(&self) -> bool {
        self.subgroups.is_empty()
    }

    /// Position of `subgroup` in this category's ordering.
    pub fn index_of(&self, subgroup: &str) -> Option<usize> {
        self.subgroups.iter().position(|s| s == subgroup)
    }

    /// Index of the catch-all subgroup (always the last slot).
    pub fn unknown_index(&self) -> usize {
        self.subgroups.len() - 1
    }
}

/// The full set of fairness categories a corpus is annotated with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    /// Categories in a fixed order; feature layouts follow this order.
    pub categories: Vec<FairnessCategory>,
}

impl Schema {
    /// Builds a schema, rejecting duplicate category names.
    pub fn new(categories: Vec<FairnessCategory>) -> Result<Self> {
        let unique: BTreeSet<&String> = categories.iter().map(|c| &c.name).collect();
        if unique.len() != categories.len() {
            return Err(Error::InvalidArgument("duplicate category names in schema".into()));
        }
        Ok(Schema { categories })
    }

    /// Looks a category up by name.
    pub fn category(&self, name: &str) -> Option<&FairnessCategory> {
        self.categories.iter().find(|c| c.name == name)
    }
}

/// Per-category soft group membership for one document. Each vector aligns
/// with its category's subgroup order and sums to 1 once normalized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupMembership {
    vectors: BTreeMap<String, Vec<f64>>,
}

impl GroupMembership {
    /// Builds a membership from raw per-subgroup weights, normalizing per the
    /// ingestion rule. Categories absent from `raw` become one-hot `unknown`;
    /// weights for subgroups a category does not declare are an error, as are
    /// negative weights.
    pub fn from_weights(
        raw: &BTreeMap<String, BTreeMap<String, f64>>,
        schema: &Schema,
    ) -> Result<Self> {
        for name in raw.keys() {
            if schema.category(name).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "membership names category '{name}' not present in the schema"
                )));
            }
        }
        let mut vectors = BTreeMap::new();
        for category in &schema.categories {
            let mut vector = vec![0.0; category.len()];
            if let Some(weights) = raw.get(&category.name) {
                for (subgroup, &weight) in weights {
                    let idx = category.index_of(subgroup).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "subgroup '{subgroup}' is not part of category '{}'",
                            category.name
                        ))
                    })?;
                    if weight < 0.0 || !weight.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "weight for '{}/{subgroup}' must be finite and >= 0, got {weight}",
                            category.name
                        )));
                    }
                    vector[idx] = weight;
                }
            }
            let mass: f64 = vector.iter().sum();
            if mass > 0.0 {
                for w in &mut vector {
                    *w /= mass;
                }
            } else {
                vector[category.unknown_index()] = 1.0;
            }
            vectors.insert(category.name.clone(), vector);
        }
        Ok(GroupMembership { vectors })
    }

    /// Full mass on a single subgroup.
    pub fn one_hot(schema: &Schema, category: &str, subgroup: &str) -> Result<Self> {
        let mut raw = BTreeMap::new();
        raw.insert(category.to_string(), BTreeMap::from([(subgroup.to_string(), 1.0)]));
        Self::from_weights(&raw, schema)
    }

    /// Builds a membership from already-aligned vectors without normalizing.
    /// Intended for tests and for `validate_corpus`, which must be able to see
    /// invalid masses.
    pub fn from_vectors(vectors: BTreeMap<String, Vec<f64>>) -> Self {
        GroupMembership { vectors }
    }

    /// The membership vector for `category`, if present.
    pub fn vector(&self, category: &str) -> Option<&[f64]> {
        self.vectors.get(category).map(Vec::as_slice)
    }

    /// Iterates `(category, vector)` pairs in category-name order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.vectors.iter()
    }
}

/// One document in the corpus.
#[derive(Debug, Clone)]
pub struct Document {
    /// Unique identifier.
    pub doc_id: String,
    /// Raw text; documents without text are skipped by the indexer.
    pub text: Option<String>,
    /// Dense embedding, when the corpus provides one.
    pub embedding: Option<Vec<f64>>,
    /// Per-category soft group membership.
    pub membership: GroupMembership,
}

/// One search request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Unique identifier.
    pub query_id: String,
    /// Query text.
    pub text: String,
}

/// One relevance judgment (TREC qrels row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    /// Query the judgment belongs to.
    pub query_id: String,
    /// Judged document.
    pub doc_id: String,
    /// Graded relevance; this toolkit treats `> 0` as relevant.
    pub relevance: i32,
}

/// One scored entry of a ranked list.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    /// Document identifier.
    pub doc_id: String,
    /// Relevance-side score (raw, as produced by the retriever).
    pub relevance: f64,
    /// Fairness-side score (raw, as produced by the scorer; 0 when unused).
    pub fairness: f64,
    /// The score the list is ordered by.
    pub blended: f64,
}

/// A ranking for one query, ordered by blended score descending with ties
/// broken by ascending `doc_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    /// Query the ranking answers.
    pub query_id: String,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Builds a list, sorting entries by blended score descending and
    /// breaking ties by ascending document id.
    pub fn new(query_id: impl Into<String>, mut entries: Vec<RankedEntry>) -> Self {
        entries.sort_by(|a, b| {
            b.blended
                .partial_cmp(&a.blended)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        RankedList { query_id: query_id.into(), entries }
    }

    /// Builds a list trusting the caller's order. Used when reading run files,
    /// where the persisted rank column is authoritative.
    pub fn from_ordered(query_id: impl Into<String>, entries: Vec<RankedEntry>) -> Self {
        RankedList { query_id: query_id.into(), entries }
    }

    /// Entries in rank order (best first).
    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the list holds no entries.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps only the top `k` entries.
    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }
}

/// An exposure (or target exposure) distribution over one category's
/// subgroups.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureDistribution {
    /// Category the distribution is over.
    pub category: String,
    /// Probability per subgroup, aligned with the category's ordering.
    pub probabilities: Vec<f64>,
}

impl ExposureDistribution {
    /// Builds a distribution, checking non-negativity and unit mass.
    pub fn new(category: impl Into<String>, probabilities: Vec<f64>) -> Result<Self> {
        let category = category.into();
        if probabilities.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "exposure over '{category}' has negative or non-finite components"
            )));
        }
        let mass: f64 = probabilities.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "exposure over '{category}' sums to {mass}, expected 1"
            )));
        }
        Ok(ExposureDistribution { category, probabilities })
    }
}

/// A document collection with id-based lookup.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus. Duplicate ids are kept in `documents` so that
    /// `validate_corpus` can report them; lookup resolves to the first
    /// occurrence.
    pub fn new(documents: Vec<Document>) -> Self {
        let mut by_id = BTreeMap::new();
        for (i, doc) in documents.iter().enumerate() {
            by_id.entry(doc.doc_id.clone()).or_insert(i);
        }
        Corpus { documents, by_id }
    }

    /// Looks a document up by id.
    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.documents[i])
    }

    /// All documents in load order.
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Number of documents (duplicates included).
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    /// True when the corpus holds no documents.
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// One problem found by [`validate_corpus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Offending document id (empty for corpus-level problems).
    pub doc_id: String,
    /// Human-readable description.
    pub message: String,
}

/// Checks a corpus against its schema and returns every violation found.
/// The report is empty iff the corpus is valid.
pub fn validate_corpus(corpus: &Corpus, schema: &Schema) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut embedding_dim: Option<usize> = None;

    for doc in corpus.documents() {
        if !seen.insert(&doc.doc_id) {
            violations.push(Violation {
                doc_id: doc.doc_id.clone(),
                message: "duplicate document id".into(),
            });
        }
        if let Some(embedding) = &doc.embedding {
            match embedding_dim {
                None => embedding_dim = Some(embedding.len()),
                Some(dim) if dim != embedding.len() => violations.push(Violation {
                    doc_id: doc.doc_id.clone(),
                    message: format!(
                        "embedding has {} dimensions, expected {dim}",
                        embedding.len()
                    ),
                }),
                Some(_) => {}
            }
        }
        for category in &schema.categories {
            match doc.membership.vector(&category.name) {
                None => violations.push(Violation {
                    doc_id: doc.doc_id.clone(),
                    message: format!("no membership vector for category '{}'", category.name),
                }),
                Some(vector) => {
                    if vector.len() != category.len() {
                        violations.push(Violation {
                            doc_id: doc.doc_id.clone(),
                            message: format!(
                                "membership over '{}' has {} components, expected {}",
                                category.name,
                                vector.len(),
                                category.len()
                            ),
                        });
                        continue;
                    }
                    if vector.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                        violations.push(Violation {
                            doc_id: doc.doc_id.clone(),
                            message: format!(
                                "membership over '{}' has negative or non-finite components",
                                category.name
                            ),
                        });
                    }
                    let mass: f64 = vector.iter().sum();
                    if (mass - 1.0).abs() > MASS_TOLERANCE {
                        violations.push(Violation {
                            doc_id: doc.doc_id.clone(),
                            message: format!(
                                "membership mass over '{}' is {mass}, expected 1",
                                category.name
                            ),
                        });
                    }
                }
            }
        }
        for (name, _) in doc.membership.iter() {
            if schema.category(name).is_none() {
                violations.push(Violation {
                    doc_id: doc.doc_id.clone(),
                    message: format!("membership names unknown category '{name}'"),
                });
            }
        }
    }
    violations
}

#[derive(Serialize, Deserialize)]
struct CorpusLine {
    doc_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    groups: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Loads a JSONL corpus, normalizing memberships against `schema`.
pub fn load_corpus(path: impl AsRef<Path>, schema: &Schema) -> Result<Corpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut documents = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: CorpusLine = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let membership = GroupMembership::from_weights(&raw.groups, schema)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        documents.push(Document {
            doc_id: raw.doc_id,
            text: raw.text,
            embedding: raw.embedding,
            membership,
        });
    }
    Ok(Corpus::new(documents))
}

/// Writes a corpus as JSONL. Memberships are written as (already normalized)
/// per-subgroup weights.
pub fn save_corpus(path: impl AsRef<Path>, corpus: &Corpus, schema: &Schema) -> Result<()> {
    let path = path.as_ref();
    let mut out = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for doc in corpus.documents() {
        let mut groups = BTreeMap::new();
        for category in &schema.categories {
            if let Some(vector) = doc.membership.vector(&category.name) {
                let weights: BTreeMap<String, f64> = category
                    .subgroups
                    .iter()
                    .zip(vector)
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(s, w)| (s.clone(), *w))
                    .collect();
                groups.insert(category.name.clone(), weights);
            }
        }
        let line = CorpusLine {
            doc_id: doc.doc_id.clone(),
            text: doc.text.clone(),
            embedding: doc.embedding.clone(),
            groups,
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| {
            Error::parse(path, 0, format!("failed to serialize document: {e}"))
        })?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Loads a schema JSON file and checks its structural invariants.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let schema: Schema =
        serde_json::from_str(&data).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let rebuilt: Result<Vec<FairnessCategory>> = schema
        .categories
        .into_iter()
        .map(|c| FairnessCategory::new(c.name, c.subgroups))
        .collect();
    Schema::new(rebuilt.map_err(|e| Error::parse(path, 0, e.to_string()))?)
}

/// Writes a schema as pretty-printed JSON.
pub fn save_schema(path: impl AsRef<Path>, schema: &Schema) -> Result<()> {
    let path = path.as_ref();
    let data = serde_json::to_string_pretty(schema)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    fs::write(path, data + "\n").map_err(|e| Error::io(path, e))
}

/// Loads queries from a TSV file (`query_id<TAB>text`).
pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut queries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (query_id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected query_id<TAB>text"))?;
        queries.push(Query { query_id: query_id.to_string(), text: text.to_string() });
    }
    Ok(queries)
}

/// Writes queries as TSV.
pub fn save_queries(path: impl AsRef<Path>, queries: &[Query]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for q in queries {
        out.push_str(&q.query_id);
        out.push('\t');
        out.push_str(&q.text);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads TREC qrels (`query_id 0 doc_id relevance`, whitespace-separated).
pub fn load_qrels(path: impl AsRef<Path>) -> Result<Vec<Judgment>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut judgments = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 4 whitespace-separated fields, got {}", fields.len()),
            ));
        }
        let relevance: i32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad relevance '{}'", fields[3])))?;
        judgments.push(Judgment {
            query_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            relevance,
        });
    }
    Ok(judgments)
}

/// Writes TREC qrels.
pub fn save_qrels(path: impl AsRef<Path>, judgments: &[Judgment]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for j in judgments {
        out.push_str(&format!("{} 0 {} {}\n", j.query_id, j.doc_id, j.relevance));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
