//! Exposure distributions and the distribution-matching fairness loss.
//!
//! The chain is: ranking scores -> top-one selection probabilities (softmax)
//! -> per-category system exposure (probability-weighted membership mass) ->
//! smoothed KL divergence against a target exposure -> weighted sum across
//! categories. The loss needs no per-document fairness labels; the target is
//! estimated from relevance judgments.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    Corpus, ExposureDistribution, FairnessCategory, GroupMembership, Judgment,
};

/// Default additive smoothing applied to both KL arguments.
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

/// Probability that each document is ranked first, given scores:
/// `P_i = exp(s_i) / sum_k exp(s_k)`, computed with max-subtraction so large
/// scores cannot overflow. Invariant under adding a constant to all scores.
pub fn top_one_fair_probability(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot compute selection probabilities for an empty score list".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Exposure aggregated from selection probabilities and per-document
/// membership rows (documents x subgroups). Because probabilities and each
/// membership row sum to 1, the result sums to 1.
pub fn exposure_from_probabilities(
    probabilities: &[f64],
    membership_rows: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if probabilities.len() != membership_rows.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities but {} membership rows",
            probabilities.len(),
            membership_rows.len()
        )));
    }
    let width = membership_rows.first().map(|r| r.len()).ok_or_else(|| {
        Error::InvalidArgument("cannot aggregate exposure over zero documents".into())
    })?;
    let mut exposure = vec![0.0; width];
    for (p, row) in probabilities.iter().zip(membership_rows) {
        if row.len() != width {
            return Err(Error::DimensionMismatch(format!(
                "membership row has {} components, expected {width}",
                row.len()
            )));
        }
        for (e, m) in exposure.iter_mut().zip(row) {
            *e += p * m;
        }
    }
    Ok(exposure)
}

/// Additive-smooths a non-negative vector and renormalizes it to sum 1.
pub fn smooth(p: &[f64], delta: f64) -> Vec<f64> {
    let total: f64 = p.iter().map(|v| v + delta).sum();
    p.iter().map(|v| (v + delta) / total).collect()
}

/// Smoothed KL divergence `KL(system || target)` in nats. Both arguments get
/// additive smoothing `delta` and renormalization, so zero components on
/// either side stay finite.
pub fn kl_divergence(system: &[f64], target: &[f64], delta: f64) -> Result<f64> {
    if system.len() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "KL arguments have lengths {} and {}",
            system.len(),
            target.len()
        )));
    }
    if system.is_empty() {
        return Err(Error::InvalidArgument("KL of empty distributions".into()));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "smoothing delta must be positive, got {delta}"
        )));
    }
    let p = smooth(system, delta);
    let q = smooth(target, delta);
    Ok(p.iter().zip(&q).map(|(pi, qi)| pi * (pi / qi).ln()).sum())
}

/// System exposure for one category: selection-probability-weighted membership
/// mass per subgroup.
pub fn system_exposure(
    scores: &[f64],
    memberships: &[GroupMembership],
    category: &FairnessCategory,
) -> Result<ExposureDistribution> {
    if scores.len() != memberships.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores but {} memberships",
            scores.len(),
            memberships.len()
        )));
    }
    let probabilities = top_one_fair_probability(scores)?;
    let rows: Result<Vec<Vec<f64>>> = memberships
        .iter()
        .map(|m| {
            m.vector(&category.name).map(<[f64]>::to_vec).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "document has no membership vector for category '{}'",
                    category.name
                ))
            })
        })
        .collect();
    let exposure = exposure_from_probabilities(&probabilities, &rows?)?;
    Ok(ExposureDistribution { category: category.name.clone(), probabilities: exposure })
}

/// Target exposure for a query: the mean membership vector over its relevant
/// documents. Falls back to the corpus-wide mean when the query has no
/// relevant documents, and to uniform when the corpus is empty. Judgments
/// whose document is absent from the corpus are ignored.
pub fn target_exposure(
    query_id: &str,
    judgments: &[Judgment],
    corpus: &Corpus,
    category: &FairnessCategory,
) -> Result<ExposureDistribution> {
    let relevant_rows: Vec<&[f64]> = judgments
        .iter()
        .filter(|j| j.query_id == query_id && j.relevance > 0)
        .filter_map(|j| corpus.get(&j.doc_id))
        .filter_map(|d| d.membership.vector(&category.name))
        .collect();

    let rows: Vec<&[f64]> = if !relevant_rows.is_empty() {
        relevant_rows
    } else {
        corpus
            .documents()
            .iter()
            .filter_map(|d| d.membership.vector(&category.name))
            .collect()
    };

    let probabilities = if rows.is_empty() {
        vec![1.0 / category.len() as f64; category.len()]
    } else {
        let mut mean = vec![0.0; category.len()];
        for row in &rows {
            if row.len() != category.len() {
                return Err(Error::DimensionMismatch(format!(
                    "membership over '{}' has {} components, expected {}",
                    category.name,
                    row.len(),
                    category.len()
                )));
            }
            for (m, v) in mean.iter_mut().zip(*row) {
                *m += v;
            }
        }
        let n = rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    };
    Ok(ExposureDistribution { category: category.name.clone(), probabilities })
}

/// Configuration for the fairness loss: per-category weights and the KL
/// smoothing constant.
#[derive(Debug, Clone)]
pub struct FairnessLossConfig {
    /// Weight per category name; weights should sum to 1.
    pub category_weights: BTreeMap<String, f64>,
    /// Additive smoothing for both KL arguments.
    pub smoothing: f64,
}

impl FairnessLossConfig {
    /// Equal weights summing to 1 across `categories`, default smoothing.
    pub fn equal(categories: &[&str]) -> Self {
        let w = 1.0 / categories.len().max(1) as f64;
        FairnessLossConfig {
            category_weights: categories.iter().map(|c| (c.to_string(), w)).collect(),
            smoothing: DEFAULT_SMOOTHING,
        }
    }

    /// Weight for one category.
    pub fn weight(&self, category: &str) -> Result<f64> {
        self.category_weights.get(category).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("no loss weight configured for category '{category}'"))
        })
    }
}

/// Fairness loss for one query: the weighted sum over target categories of
/// the smoothed KL divergence between system and target exposure.
pub fn fairness_loss(
    scores: &[f64],
    memberships: &[GroupMembership],
    targets: &[ExposureDistribution],
    config: &FairnessLossConfig,
) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("fairness loss needs at least one target".into()));
    }
    let probabilities = top_one_fair_probability(scores)?;
    if probabilities.len() != memberships.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores but {} memberships",
            probabilities.len(),
            memberships.len()
        )));
    }
    let mut loss = 0.0;
    for target in targets {
        let weight = config.weight(&target.category)?;
        let rows: Result<Vec<Vec<f64>>> = memberships
            .iter()
            .map(|m| {
                m.vector(&target.category).map(<[f64]>::to_vec).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "document has no membership vector for category '{}'",
                        target.category
                    ))
                })
            })
            .collect();
        let exposure = exposure_from_probabilities(&probabilities, &rows?)?;
        loss += weight * kl_divergence(&exposure, &target.probabilities, config.smoothing)?;
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Document, FairnessCategory, Schema};
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn gender() -> FairnessCategory {
        FairnessCategory::new(
            "gender",
            vec!["male".into(), "female".into(), "unknown".into()],
        )
        .unwrap()
    }

    fn schema() -> Schema {
        Schema::new(vec![gender()]).unwrap()
    }

    // Brute-force reference: exponentiate and normalize directly, no
    // stabilization. Safe for the small scores used in tests.
    fn naive_softmax(scores: &[f64]) -> Vec<f64> {
        let exps: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    #[test]
    fn probability_matches_naive_softmax() {
        let scores = [2.0_f64.ln(), 0.0];
        let p = top_one_fair_probability(&scores).unwrap();
        let expected = naive_softmax(&scores);
        assert_abs_diff_eq!(p[0], expected[0], epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn probability_is_shift_invariant() {
        let scores = [0.3, -1.2, 4.0];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.456).collect();
        let a = top_one_fair_probability(&scores).unwrap();
        let b = top_one_fair_probability(&shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn probability_survives_huge_scores() {
        let p = top_one_fair_probability(&[1000.0, 999.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn probability_rejects_empty_input() {
        assert!(top_one_fair_probability(&[]).is_err());
    }

    #[test]
    fn system_exposure_matches_hand_example() {
        // Two docs, scores (ln 2, 0) -> P = (2/3, 1/3); one-hot male then
        // female over a 3-subgroup category.
        let cat = gender();
        let s = schema();
        let m1 = GroupMembership::one_hot(&s, "gender", "male").unwrap();
        let m2 = GroupMembership::one_hot(&s, "gender", "female").unwrap();
        let e = system_exposure(&[2.0_f64.ln(), 0.0], &[m1, m2], &cat).unwrap();
        assert_abs_diff_eq!(e.probabilities[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.probabilities[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.probabilities[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn system_exposure_conserves_mass() {
        let cat = gender();
        let s = schema();
        let memberships = vec![
            GroupMembership::one_hot(&s, "gender", "male").unwrap(),
            GroupMembership::one_hot(&s, "gender", "female").unwrap(),
            GroupMembership::one_hot(&s, "gender", "unknown").unwrap(),
        ];
        let e = system_exposure(&[1.7, -0.3, 0.0], &memberships, &cat).unwrap();
        assert_abs_diff_eq!(e.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn kl_zero_for_identical_distributions() {
        let p = [0.2, 0.5, 0.3];
        let kl = kl_divergence(&p, &p, DEFAULT_SMOOTHING).unwrap();
        assert_abs_diff_eq!(kl, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn kl_matches_hand_computed_smoothed_values() {
        // Oracle: smooth both sides with delta = 1e-6 and renormalize, then
        // sum p*ln(p/q). Forward case (1,0)||(0.5,0.5) ~ ln 2; reverse case
        // stays finite at roughly ln(1/delta)/2 scale.
        let forward = kl_divergence(&[1.0, 0.0], &[0.5, 0.5], 1e-6).unwrap();
        assert_abs_diff_eq!(forward, 0.6931323650775184, epsilon = 1e-12);
        assert_abs_diff_eq!(forward, std::f64::consts::LN_2, epsilon = 1e-4);

        let reverse = kl_divergence(&[0.5, 0.5], &[1.0, 0.0], 1e-6).unwrap();
        assert!(reverse.is_finite());
        assert_abs_diff_eq!(reverse, 6.2146095984204415, epsilon = 1e-12);
    }

    #[test]
    fn kl_is_non_negative_on_random_distributions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..6);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect::<Vec<f64>>()
            };
            let p = draw(&mut rng);
            let q = draw(&mut rng);
            let kl = kl_divergence(&p, &q, DEFAULT_SMOOTHING).unwrap();
            assert!(kl >= -1e-12, "KL went negative: {kl}");
        }
    }

    #[test]
    fn target_exposure_averages_relevant_memberships() {
        let s = schema();
        let cat = gender();
        let docs = vec![
            Document {
                doc_id: "d1".into(),
                text: None,
                embedding: None,
                membership: GroupMembership::one_hot(&s, "gender", "male").unwrap(),
            },
            Document {
                doc_id: "d2".into(),
                text: None,
                embedding: None,
                membership: GroupMembership::from_vectors(BTreeMap::from([(
                    "gender".to_string(),
                    vec![0.5, 0.5, 0.0],
                )])),
            },
            Document {
                doc_id: "d3".into(),
                text: None,
                embedding: None,
                membership: GroupMembership::one_hot(&s, "gender", "unknown").unwrap(),
            },
        ];
        let corpus = Corpus::new(docs);
        let judgments = vec![
            Judgment { query_id: "q1".into(), doc_id: "d1".into(), relevance: 1 },
            Judgment { query_id: "q1".into(), doc_id: "d2".into(), relevance: 1 },
            Judgment { query_id: "q1".into(), doc_id: "d3".into(), relevance: 0 },
        ];
        let t = target_exposure("q1", &judgments, &corpus, &cat).unwrap();
        assert_abs_diff_eq!(t.probabilities[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(t.probabilities[1], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(t.probabilities[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn target_exposure_soft_membership_example() {
        // Three relevant docs all carrying (0.5, 0.5, 0) -> target (0.5, 0.5, 0).
        let cat = gender();
        let soft = GroupMembership::from_vectors(BTreeMap::from([(
            "gender".to_string(),
            vec![0.5, 0.5, 0.0],
        )]));
        let docs: Vec<Document> = (1..=3)
            .map(|i| Document {
                doc_id: format!("d{i}"),
                text: None,
                embedding: None,
                membership: soft.clone(),
            })
            .collect();
        let corpus = Corpus::new(docs);
        let judgments: Vec<Judgment> = (1..=3)
            .map(|i| Judgment { query_id: "q".into(), doc_id: format!("d{i}"), relevance: 1 })
            .collect();
        let t = target_exposure("q", &judgments, &corpus, &cat).unwrap();
        assert_eq!(t.probabilities, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn target_exposure_falls_back_to_corpus_mean() {
        let s = schema();
        let cat = gender();
        let docs = vec![
            Document {
                doc_id: "d1".into(),
                text: None,
                embedding: None,
                membership: GroupMembership::one_hot(&s, "gender", "male").unwrap(),
            },
            Document {
                doc_id: "d2".into(),
                text: None,
                embedding: None,
                membership: GroupMembership::one_hot(&s, "gender", "female").unwrap(),
            },
        ];
        let corpus = Corpus::new(docs);
        let t = target_exposure("missing", &[], &corpus, &cat).unwrap();
        assert_eq!(t.probabilities, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn target_exposure_uniform_on_empty_corpus() {
        let cat = gender();
        let t = target_exposure("q", &[], &Corpus::new(Vec::new()), &cat).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(t.probabilities, vec![third, third, third]);
    }

    #[test]
    fn fairness_loss_matches_hand_example() {
        // Two docs, one-hot male / one-hot female, equal scores -> system
        // exposure (0.5, 0.5, 0); target (0.9, 0.1, 0); single category with
        // weight 1 -> KL ~ 0.5108 (hand value 0.5108220682 before smoothing
        // perturbation, which stays under 1e-4 here).
        let s = schema();
        let memberships = vec![
            GroupMembership::one_hot(&s, "gender", "male").unwrap(),
            GroupMembership::one_hot(&s, "gender", "female").unwrap(),
        ];
        let target = ExposureDistribution::new("gender", vec![0.9, 0.1, 0.0]).unwrap();
        let config = FairnessLossConfig::equal(&["gender"]);
        let loss = fairness_loss(&[0.0, 0.0], &memberships, &[target], &config).unwrap();
        assert_abs_diff_eq!(loss, 0.5108220682337437, epsilon = 1e-4);
    }

    #[test]
    fn fairness_loss_zero_when_system_matches_target() {
        let s = schema();
        let memberships = vec![
            GroupMembership::one_hot(&s, "gender", "male").unwrap(),
            GroupMembership::one_hot(&s, "gender", "female").unwrap(),
        ];
        let target = ExposureDistribution::new("gender", vec![0.5, 0.5, 0.0]).unwrap();
        let config = FairnessLossConfig::equal(&["gender"]);
        let loss = fairness_loss(&[1.0, 1.0], &memberships, &[target], &config).unwrap();
        assert_abs_diff_eq!(loss, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn fairness_loss_requires_weights_for_every_target() {
        let s = schema();
        let memberships = vec![GroupMembership::one_hot(&s, "gender", "male").unwrap()];
        let target = ExposureDistribution::new("gender", vec![1.0, 0.0, 0.0]).unwrap();
        let config = FairnessLossConfig::equal(&["age"]);
        assert!(fairness_loss(&[0.0], &memberships, &[target], &config).is_err());
    }
}
