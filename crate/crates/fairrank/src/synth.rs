//! Seeded synthetic dataset generator for desk-scale end-to-end experiments.
//!
//! The generator partitions documents into one bucket per query. Inside a
//! bucket, group labels and relevance roles are dealt out by a seeded
//! shuffle, so document ids carry no group information. The relevant
//! documents of every query follow a fixed per-category target (descending
//! shares for the named subgroups, a small share for `unknown`) exactly,
//! and the relevance judgments record them. Distractors over-represent the
//! leading subgroup, with a tilt that rotates from query to query, so the
//! retrieved candidate lists are skewed while the relevant pool inside
//! them stays on target. That geometry gives exposure training one
//! consistent way to drive its loss to zero on every query at once:
//! concentrate probability mass on the relevant pool.
//!
//! Texts are term bags. Relevant documents contain all of their query's
//! terms once, distractors a rotating window of them whose width cycles
//! from a single term up to the full query, and both vary their filler
//! padding. BM25 therefore spreads the distractors across a wide band
//! whose top reaches into the relevant band, so no BM25 threshold
//! separates the two classes. The `skew` knob biases what BM25 puts on top
//! without touching the judgments: a skew-sized slice of the leading
//! subgroup's relevant documents repeats every query term, which lifts
//! them above both bands. The top ranks then over-represent that subgroup
//! relative to the per-query target while staying fully relevant, so the
//! skew costs fairness, not relevance.
//!
//! Embeddings put each subgroup on its own axis (axis 0 is shared by
//! `unknown`). A relevant document's embedding is the sum of its
//! subgroups' centroids plus Gaussian noise, so its similarity features
//! identify its group. A distractor's embedding points away from the
//! category centroids regardless of its group: distractors are
//! recognizable as a class but anonymous as group members, which is what
//! lets a trained scorer demote them without re-sorting the ranking into
//! group blocks. A query's embedding is the proportion-weighted centroid
//! mix; category embeddings average their subgroup centroids.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::model::{
    save_corpus, save_qrels, save_queries, save_schema, Corpus, Document, FairnessCategory,
    GroupMembership, Judgment, Query, Schema,
};

const QUERY_TERMS: usize = 32;
const BOOST_SCALE: f64 = 4.0;
const RELEVANT_FRACTION: f64 = 0.4;
const UNKNOWN_SHARE: f64 = 0.1;
const DISTRACTOR_TILT_ROTATION: [f64; 3] = [0.75, 1.0, 1.25];

/// One fairness category to synthesize: its name and how many subgroups it
/// gets (the last one is always `unknown`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCategorySpec {
    /// Category name.
    pub name: String,
    /// Subgroup count including `unknown`; at least 2.
    pub subgroups: usize,
}

/// Generator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Total documents.
    pub num_docs: usize,
    /// Total queries; documents are split into one bucket per query.
    pub num_queries: usize,
    /// Fairness categories to annotate documents with.
    pub categories: Vec<SynthCategorySpec>,
    /// Embedding dimension; must cover one axis per named subgroup plus the
    /// shared `unknown` axis.
    pub embedding_dim: usize,
    /// How far the retrieved lists deviate from the per-query group target,
    /// in [0, 1]: the fraction of leading-subgroup relevant documents whose
    /// texts are boosted, the boost strength, and the tilt of the
    /// distractor group mix toward the leading subgroup. Values below 0.125
    /// round to no boost.
    pub skew: f64,
    /// Standard deviation of the Gaussian noise added to document and query
    /// embeddings.
    pub noise: f64,
    /// Seed for every random choice the generator makes.
    pub seed: u64,
}

impl SynthConfig {
    /// Smallest embedding dimension that fits the given categories: one
    /// axis per named subgroup plus the shared `unknown` axis.
    pub fn required_embedding_dim(categories: &[SynthCategorySpec]) -> usize {
        1 + categories.iter().map(|c| c.subgroups.saturating_sub(1)).sum::<usize>()
    }

    fn validate(&self) -> Result<()> {
        if self.num_queries == 0 {
            return Err(Error::InvalidArgument("num_queries must be positive".into()));
        }
        if self.num_docs < 2 * self.num_queries {
            return Err(Error::InvalidArgument(format!(
                "num_docs must be at least 2 * num_queries so every query gets >= 2 relevant \
                 documents, got {} docs for {} queries",
                self.num_docs, self.num_queries
            )));
        }
        if self.categories.is_empty() {
            return Err(Error::InvalidArgument("at least one category is required".into()));
        }
        for spec in &self.categories {
            if spec.subgroups < 2 {
                return Err(Error::InvalidArgument(format!(
                    "category '{}' needs at least 2 subgroups, got {}",
                    spec.name, spec.subgroups
                )));
            }
        }
        let required = Self::required_embedding_dim(&self.categories);
        if self.embedding_dim < required {
            return Err(Error::InvalidArgument(format!(
                "embedding_dim {} is too small for these categories, need at least {required}",
                self.embedding_dim
            )));
        }
        if !self.skew.is_finite() || !(0.0..=1.0).contains(&self.skew) {
            return Err(Error::InvalidArgument(format!(
                "skew must lie in [0, 1], got {}",
                self.skew
            )));
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise must be finite and >= 0, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Everything one generation run produces.
#[derive(Debug, Clone)]
pub struct SynthData {
    /// Documents with texts, embeddings, and one-hot memberships.
    pub corpus: Corpus,
    /// The fairness schema the corpus is annotated with.
    pub schema: Schema,
    /// Queries, one per bucket.
    pub queries: Vec<Query>,
    /// Relevance judgments (relevant documents only).
    pub qrels: Vec<Judgment>,
    /// Embeddings for every query, document, category, and subgroup key.
    pub embeddings: EmbeddingTable,
}

impl SynthData {
    /// Writes `corpus.jsonl`, `schema.json`, `queries.tsv`, `qrels.txt`,
    /// and `embeddings.jsonl` into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_corpus(dir.join("corpus.jsonl"), &self.corpus, &self.schema)?;
        save_schema(dir.join("schema.json"), &self.schema)?;
        save_queries(dir.join("queries.tsv"), &self.queries)?;
        save_qrels(dir.join("qrels.txt"), &self.qrels)?;
        self.embeddings.save(dir.join("embeddings.jsonl"))
    }
}

/// Fixed group shares for a category with `subgroups` subgroups: `unknown`
/// gets 0.1 and the named subgroups split the rest in descending arithmetic
/// proportion, e.g. 3 subgroups give (0.6, 0.3, 0.1).
pub fn target_proportions(subgroups: usize) -> Vec<f64> {
    let named = subgroups - 1;
    let total_weight: f64 = (named * (named + 1) / 2) as f64;
    let mut shares: Vec<f64> = (0..named)
        .map(|i| (1.0 - UNKNOWN_SHARE) * (named - i) as f64 / total_weight)
        .collect();
    shares.push(UNKNOWN_SHARE);
    shares
}

/// Apportions `total` into integer counts proportional to `shares` with the
/// largest-remainder rule, remainder ties broken by lower index.
fn largest_remainder(total: usize, shares: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for i in 0..total.saturating_sub(assigned) {
        counts[order[i % order.len()]] += 1;
    }
    counts
}

fn subgroup_names(spec: &SynthCategorySpec) -> Vec<String> {
    let mut names: Vec<String> =
        (1..spec.subgroups).map(|i| format!("{}_s{i}", spec.name)).collect();
    names.push("unknown".to_string());
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    BoostedRelevant,
    Relevant,
    Distractor,
}

/// Generates a complete dataset. Identical configurations produce
/// byte-identical files. Only the first category shapes document texts (and
/// therefore retrievability); additional categories get independent group
/// assignments with the same proportions.
pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let schema = Schema::new(
        config
            .categories
            .iter()
            .map(|spec| FairnessCategory::new(spec.name.clone(), subgroup_names(spec)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let doc_width = config.num_docs.to_string().len();
    let query_width = config.num_queries.to_string().len();
    let doc_id = |i: usize| format!("d{i:0doc_width$}");
    let query_id = |q: usize| format!("q{q:0query_width$}");

    // Per-document labels, filled bucket by bucket.
    let mut group_of: Vec<Vec<usize>> = vec![vec![0; config.num_docs]; schema.categories.len()];
    let mut role_of: Vec<(usize, Role)> = vec![(0, Role::Distractor); config.num_docs];
    let mut queries = Vec::with_capacity(config.num_queries);
    let mut qrels = Vec::new();

    let base = config.num_docs / config.num_queries;
    let extra = config.num_docs % config.num_queries;
    let boost = (config.skew * BOOST_SCALE).round() as usize;
    let mut start = 0usize;
    for q in 0..config.num_queries {
        let size = base + usize::from(q < extra);
        let bucket: Vec<usize> = (start..start + size).collect();
        start += size;

        let qid = query_id(q);
        let terms: Vec<String> = (0..QUERY_TERMS).map(|t| format!("q{q}t{t}")).collect();
        queries.push(Query { query_id: qid.clone(), text: terms.join(" ") });

        // First category drives relevance roles and text skew.
        let shares = target_proportions(config.categories[0].subgroups);
        let n_rel = ((size as f64 * RELEVANT_FRACTION).round() as usize).clamp(2, size);
        let rel_counts = largest_remainder(n_rel, &shares);
        let tilt = (config.skew * DISTRACTOR_TILT_ROTATION[q % 3]).min(1.0);
        let dist_shares: Vec<f64> = shares
            .iter()
            .enumerate()
            .map(|(g, s)| (1.0 - tilt) * s + if g == 0 { tilt } else { 0.0 })
            .collect();
        let dist_counts = largest_remainder(size - n_rel, &dist_shares);
        let boosted = ((config.skew * rel_counts[0] as f64).round() as usize).min(rel_counts[0]);

        let mut assignment: Vec<(usize, Role)> = Vec::with_capacity(size);
        for (g, count) in rel_counts.iter().enumerate() {
            let boosted_here = if g == 0 { boosted } else { 0 };
            assignment.extend(std::iter::repeat_n((g, Role::BoostedRelevant), boosted_here));
            assignment.extend(std::iter::repeat_n((g, Role::Relevant), count - boosted_here));
        }
        for (g, count) in dist_counts.iter().enumerate() {
            assignment.extend(std::iter::repeat_n((g, Role::Distractor), *count));
        }
        let mut shuffled = bucket.clone();
        shuffled.shuffle(&mut rng);
        for (&doc, &(g, role)) in shuffled.iter().zip(&assignment) {
            group_of[0][doc] = g;
            role_of[doc] = (q, role);
            if role != Role::Distractor {
                qrels.push(Judgment {
                    query_id: qid.clone(),
                    doc_id: doc_id(doc),
                    relevance: 1,
                });
            }
        }

        // Remaining categories: independent label deals at the same shares.
        for (c, spec) in config.categories.iter().enumerate().skip(1) {
            let counts = largest_remainder(size, &target_proportions(spec.subgroups));
            let mut labels: Vec<usize> = Vec::with_capacity(size);
            for (g, count) in counts.iter().enumerate() {
                labels.extend(std::iter::repeat_n(g, *count));
            }
            let mut deal = bucket.clone();
            deal.shuffle(&mut rng);
            for (&doc, &g) in deal.iter().zip(&labels) {
                group_of[c][doc] = g;
            }
        }
    }
    qrels.sort_by(|a, b| a.query_id.cmp(&b.query_id).then_with(|| a.doc_id.cmp(&b.doc_id)));

    // Subgroup centroids: axis 0 is the shared `unknown` direction, every
    // named subgroup gets its own axis.
    let dim = config.embedding_dim;
    let axis = |i: usize| {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    };
    let mut centroids: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    centroids.insert("unknown".to_string(), axis(0));
    let mut next_axis = 1;
    let mut category_axes: Vec<Vec<usize>> = Vec::new();
    for category in &schema.categories {
        let mut axes = Vec::with_capacity(category.subgroups.len());
        for subgroup in &category.subgroups {
            if subgroup == "unknown" {
                axes.push(0);
            } else {
                centroids.insert(subgroup.clone(), axis(next_axis));
                axes.push(next_axis);
                next_axis += 1;
            }
        }
        category_axes.push(axes);
    }

    let mut embeddings = EmbeddingTable::new();
    for (key, vector) in &centroids {
        embeddings.insert(key.clone(), vector.clone())?;
    }
    for (category, axes) in schema.categories.iter().zip(&category_axes) {
        let mut mean = vec![0.0; dim];
        for &a in axes {
            mean[a] += 1.0 / axes.len() as f64;
        }
        embeddings.insert(category.name.clone(), mean)?;
    }

    let draw_noise = |rng: &mut ChaCha8Rng, v: &mut [f64]| {
        if config.noise > 0.0 {
            for x in v.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x += config.noise * z;
            }
        }
    };

    // Documents: text from role, membership from groups, embedding from
    // groups for relevant documents and from the anti-centroid direction
    // for distractors.
    let mut documents = Vec::with_capacity(config.num_docs);
    for i in 0..config.num_docs {
        let (q, role) = role_of[i];
        let terms: Vec<String> = (0..QUERY_TERMS).map(|t| format!("q{q}t{t}")).collect();
        let mut words: Vec<String> = Vec::new();
        let fillers;
        match role {
            Role::BoostedRelevant => {
                for term in &terms {
                    words.extend(std::iter::repeat_n(term.clone(), 1 + boost));
                }
                fillers = 6;
            }
            Role::Relevant => {
                words.extend(terms.iter().cloned());
                fillers = 4 * (i % 4);
            }
            Role::Distractor => {
                let m = 1 + i % QUERY_TERMS;
                for t in 0..m {
                    words.push(terms[(i + t) % QUERY_TERMS].clone());
                }
                fillers = 2 * (i % 3);
            }
        }
        for j in 0..fillers {
            words.push(format!("f{i}x{j}"));
        }

        let mut vectors = BTreeMap::new();
        let mut embedding = vec![0.0; dim];
        for (c, category) in schema.categories.iter().enumerate() {
            let g = group_of[c][i];
            let mut one_hot = vec![0.0; category.subgroups.len()];
            one_hot[g] = 1.0;
            vectors.insert(category.name.clone(), one_hot);
            if role == Role::Distractor {
                for &a in &category_axes[c] {
                    embedding[a] -= 1.0 / category_axes[c].len() as f64;
                }
            } else {
                embedding[category_axes[c][g]] += 1.0;
            }
        }
        draw_noise(&mut rng, &mut embedding);
        embeddings.insert(doc_id(i), embedding.clone())?;
        documents.push(Document {
            doc_id: doc_id(i),
            text: Some(words.join(" ")),
            embedding: Some(embedding),
            membership: GroupMembership::from_vectors(vectors),
        });
    }

    // Queries: proportion-weighted centroid mixes.
    for q in 0..config.num_queries {
        let mut embedding = vec![0.0; dim];
        for (spec, axes) in config.categories.iter().zip(&category_axes) {
            for (share, &a) in target_proportions(spec.subgroups).iter().zip(axes) {
                embedding[a] += share;
            }
        }
        draw_noise(&mut rng, &mut embedding);
        embeddings.insert(query_id(q), embedding)?;
    }

    Ok(SynthData { corpus: Corpus::new(documents), schema, queries, qrels, embeddings })
}
