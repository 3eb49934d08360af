//! Per-(query, document) feature assembly from ingested embeddings and BM25
//! scores.
//!
//! Embeddings are read from disk, never computed here; the table maps string
//! keys (query ids, document ids, category names, subgroup names) to vectors
//! of one fixed dimension. The feature vector layout is a pure function of
//! the fairness schema: the raw BM25 score, then query/document similarity
//! to each category embedding, then query-side and document-side similarity
//! blocks over every subgroup, categories in schema order throughout.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Schema;

/// Fixed-dimension map from string key to embedding vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    vectors: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingLine {
    key: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    /// Creates an empty table.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vector, rejecting empty or non-finite vectors, duplicate keys,
    /// and dimension disagreements with vectors already present.
    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let key = key.into();
        if vector.is_empty() {
            return Err(Error::InvalidArgument(format!("embedding '{key}' is empty")));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "embedding '{key}' contains a non-finite component"
            )));
        }
        if let Some(dim) = self.dimension() {
            if vector.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "embedding '{key}' has {} components, table uses {dim}",
                    vector.len()
                )));
            }
        }
        if self.vectors.contains_key(&key) {
            return Err(Error::InvalidArgument(format!("duplicate embedding key '{key}'")));
        }
        self.vectors.insert(key, vector);
        Ok(())
    }

    /// Vector for `key`, if present.
    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    /// Vector for `key`, or an error naming the missing key.
    pub fn require(&self, key: &str) -> Result<&[f64]> {
        self.get(key).ok_or_else(|| Error::MissingEmbedding(key.to_string()))
    }

    /// Shared dimension of the stored vectors; `None` while empty.
    pub fn dimension(&self) -> Option<usize> {
        self.vectors.values().next().map(Vec::len)
    }

    /// Number of stored vectors.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    /// True when no vectors are stored.
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Loads a JSON-lines file of `{"key": str, "vector": [f64]}` rows.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = EmbeddingTable::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: EmbeddingLine = serde_json::from_str(line)
                .map_err(|e| Error::parse(path, i + 1, format!("bad embedding row: {e}")))?;
            table
                .insert(row.key, row.vector)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(table)
    }

    /// Writes the table as JSON-lines, keys sorted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (key, vector) in &self.vectors {
            let line = EmbeddingLine { key: key.clone(), vector: vector.clone() };
            out.push_str(&serde_json::to_string(&line).expect("embedding row serializes"));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Cosine similarity `u·v / (|u||v|)`, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "cosine inputs have {} and {} components",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::InvalidArgument("cosine of a zero-norm vector".into()));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Ordered feature names for a fairness schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
}

impl FeatureSchema {
    /// Builds the canonical layout: `bm-25`; `q_<cat>_sim`, `d_<cat>_sim`
    /// per category; then per category a query-side block
    /// `q_<cat>_<sub>_sim` over its subgroups followed by the matching
    /// document-side block.
    pub fn for_schema(schema: &Schema) -> Self {
        let mut names = vec!["bm-25".to_string()];
        for category in &schema.categories {
            names.push(format!("q_{}_sim", category.name));
            names.push(format!("d_{}_sim", category.name));
        }
        for category in &schema.categories {
            for side in ["q", "d"] {
                for subgroup in &category.subgroups {
                    names.push(format!("{side}_{}_{subgroup}_sim", category.name));
                }
            }
        }
        FeatureSchema { names }
    }

    /// Feature names in production order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of features.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// True for an empty layout (never produced by [`Self::for_schema`]).
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Assembles one feature vector in [`FeatureSchema`] order. Every needed
/// embedding key (query id, document id, category names, subgroup names)
/// must be present or the error names the missing key.
pub fn build_feature_vector(
    query_id: &str,
    doc_id: &str,
    bm25_score: f64,
    embeddings: &EmbeddingTable,
    schema: &Schema,
) -> Result<Vec<f64>> {
    let q = embeddings.require(query_id)?;
    let d = embeddings.require(doc_id)?;
    let mut features = vec![bm25_score];
    for category in &schema.categories {
        let c = embeddings.require(&category.name)?;
        features.push(cosine_similarity(q, c)?);
        features.push(cosine_similarity(d, c)?);
    }
    for category in &schema.categories {
        for side in [q, d] {
            for subgroup in &category.subgroups {
                let s = embeddings.require(subgroup)?;
                features.push(cosine_similarity(side, s)?);
            }
        }
    }
    Ok(features)
}

/// Writes feature rows as TSV: `query_id`, `doc_id`, then one column per
/// feature name, values at full precision.
pub fn write_features(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    rows: &[(String, String, Vec<f64>)],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("query_id\tdoc_id");
    for name in schema.names() {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for (query_id, doc_id, features) in rows {
        if features.len() != schema.len() {
            return Err(Error::DimensionMismatch(format!(
                "feature row for ({query_id}, {doc_id}) has {} values, schema has {}",
                features.len(),
                schema.len()
            )));
        }
        out.push_str(query_id);
        out.push('\t');
        out.push_str(doc_id);
        for value in features {
            out.push_str(&format!("\t{value}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FairnessCategory;
    use approx::assert_abs_diff_eq;

    fn two_category_schema() -> Schema {
        Schema::new(vec![
            FairnessCategory::new("g", vec!["a".into(), "b".into(), "unknown".into()]).unwrap(),
            FairnessCategory::new("h", vec!["c".into(), "unknown".into()]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn cosine_handles_canonical_cases() {
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn cosine_rejects_zero_norm_and_mismatched_dimensions() {
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cosine_is_scale_invariant() {
        let u = [0.3, -1.2, 0.7];
        let v = [1.1, 0.4, -0.2];
        let scaled: Vec<f64> = u.iter().map(|x| 7.5 * x).collect();
        assert_abs_diff_eq!(
            cosine_similarity(&u, &v).unwrap(),
            cosine_similarity(&scaled, &v).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn feature_names_follow_schema_order() {
        let layout = FeatureSchema::for_schema(&two_category_schema());
        let expected = vec![
            "bm-25",
            "q_g_sim",
            "d_g_sim",
            "q_h_sim",
            "d_h_sim",
            "q_g_a_sim",
            "q_g_b_sim",
            "q_g_unknown_sim",
            "d_g_a_sim",
            "d_g_b_sim",
            "d_g_unknown_sim",
            "q_h_c_sim",
            "q_h_unknown_sim",
            "d_h_c_sim",
            "d_h_unknown_sim",
        ];
        assert_eq!(layout.names(), &expected[..]);
        assert_eq!(layout.len(), 1 + 2 * 2 + 2 * (3 + 2));
    }

    #[test]
    fn four_plus_twenty_one_subgroups_yield_fifty_five_features() {
        let gender: Vec<String> =
            ["male", "female", "non_binary", "unknown"].iter().map(|s| s.to_string()).collect();
        let mut geo: Vec<String> = (0..20).map(|i| format!("loc{i:02}")).collect();
        geo.push("unknown".into());
        let schema = Schema::new(vec![
            FairnessCategory::new("gender", gender).unwrap(),
            FairnessCategory::new("geo_loc", geo).unwrap(),
        ])
        .unwrap();
        assert_eq!(FeatureSchema::for_schema(&schema).len(), 55);
    }

    fn orthogonal_table(schema: &Schema) -> EmbeddingTable {
        // One distinct axis per key so every cross similarity is 0.
        let mut keys = vec!["q1".to_string(), "d1".to_string()];
        for category in &schema.categories {
            keys.push(category.name.clone());
            for subgroup in &category.subgroups {
                if !keys.contains(subgroup) {
                    keys.push(subgroup.clone());
                }
            }
        }
        let dim = keys.len();
        let mut table = EmbeddingTable::new();
        for (i, key) in keys.iter().enumerate() {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            table.insert(key.clone(), v).unwrap();
        }
        table
    }

    #[test]
    fn orthogonal_embeddings_leave_only_the_bm25_feature() {
        let schema = two_category_schema();
        let table = orthogonal_table(&schema);
        let features = build_feature_vector("q1", "d1", 3.25, &table, &schema).unwrap();
        assert_eq!(features.len(), FeatureSchema::for_schema(&schema).len());
        assert_eq!(features[0], 3.25);
        assert!(features[1..].iter().all(|f| *f == 0.0));
    }

    #[test]
    fn document_matching_subgroup_embedding_scores_one_on_that_feature() {
        let schema = two_category_schema();
        let mut table = orthogonal_table(&schema);
        let a = table.get("a").unwrap().to_vec();
        table.vectors.insert("d1".into(), a);
        let features = build_feature_vector("q1", "d1", 0.0, &table, &schema).unwrap();
        let layout = FeatureSchema::for_schema(&schema);
        let pos = layout.names().iter().position(|n| n == "d_g_a_sim").unwrap();
        assert_abs_diff_eq!(features[pos], 1.0);
    }

    #[test]
    fn missing_embedding_error_names_the_key() {
        let schema = two_category_schema();
        let mut table = orthogonal_table(&schema);
        table.vectors.remove("unknown");
        let err = build_feature_vector("q1", "d1", 0.0, &table, &schema).unwrap_err();
        assert!(err.to_string().contains("'unknown'"), "got: {err}");
    }

    #[test]
    fn table_rejects_dimension_drift_and_duplicates() {
        let mut table = EmbeddingTable::new();
        table.insert("a", vec![1.0, 0.0]).unwrap();
        assert!(table.insert("b", vec![1.0]).is_err());
        assert!(table.insert("a", vec![0.0, 1.0]).is_err());
        assert!(table.insert("c", vec![f64::NAN, 0.0]).is_err());
        assert!(table.insert("d", vec![]).is_err());
    }

    #[test]
    fn table_roundtrips_through_jsonl() {
        let mut table = EmbeddingTable::new();
        table.insert("q1", vec![0.5, -1.5]).unwrap();
        table.insert("d1", vec![1.0, 0.25]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        table.save(&path).unwrap();
        let loaded = EmbeddingTable::load(&path).unwrap();
        assert_eq!(table, loaded);
        let again = dir.path().join("emb2.jsonl");
        loaded.save(&again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    #[test]
    fn load_reports_bad_rows_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        fs::write(&path, "{\"key\":\"a\",\"vector\":[1.0]}\nnot json\n").unwrap();
        let err = EmbeddingTable::load(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "got: {err}");
    }

    #[test]
    fn feature_tsv_has_header_and_full_precision_values() {
        let schema = two_category_schema();
        let layout = FeatureSchema::for_schema(&schema);
        let rows = vec![(
            "q1".to_string(),
            "d1".to_string(),
            (0..layout.len()).map(|i| i as f64 + 0.125).collect::<Vec<f64>>(),
        )];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.tsv");
        write_features(&path, &layout, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("query_id\tdoc_id\tbm-25\tq_g_sim"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("q1\td1\t0.125\t1.125"));
    }
}
