//! Full-batch gradient-descent training of fairness scorers against the
//! distribution-matching loss.
//!
//! Per query the forward pass is scores -> selection probabilities ->
//! per-category exposure -> smoothed KL against the target; the backward pass
//! is the exact analytic chain. Queries contribute independently and the
//! batch loss is their mean, accumulated in a fixed order so results are
//! bitwise reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exposure::{
    exposure_from_probabilities, top_one_fair_probability, FairnessLossConfig,
};
use crate::model::{Document, ExposureDistribution};
use crate::scorer::{Architecture, ScorerModel};

/// Training inputs for one query: a feature row per candidate document,
/// membership matrices per category, and one target distribution per
/// category.
#[derive(Debug, Clone)]
pub struct QueryCandidates {
    /// Query identifier (reporting only).
    pub query_id: String,
    /// Feature rows, documents x input_dim.
    pub features: Vec<Vec<f64>>,
    /// Membership rows per category, documents x subgroups.
    pub memberships: BTreeMap<String, Vec<Vec<f64>>>,
    /// Target exposure per category.
    pub targets: BTreeMap<String, Vec<f64>>,
}

impl QueryCandidates {
    /// Builds and shape-checks a training instance.
    pub fn new(
        query_id: impl Into<String>,
        features: Vec<Vec<f64>>,
        memberships: BTreeMap<String, Vec<Vec<f64>>>,
        targets: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self> {
        let query_id = query_id.into();
        let n = features.len();
        if n == 0 {
            return Err(Error::InvalidArgument(format!(
                "query '{query_id}' has no candidate documents"
            )));
        }
        let dim = features[0].len();
        if features.iter().any(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "query '{query_id}' has ragged feature rows"
            )));
        }
        for (category, target) in &targets {
            let rows = memberships.get(category).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "query '{query_id}' targets category '{category}' without membership rows"
                ))
            })?;
            if rows.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "query '{query_id}': {} membership rows for '{category}', expected {n}",
                    rows.len()
                )));
            }
            if rows.iter().any(|r| r.len() != target.len()) {
                return Err(Error::DimensionMismatch(format!(
                    "query '{query_id}': membership width differs from target width for '{category}'"
                )));
            }
        }
        Ok(QueryCandidates { query_id, features, memberships, targets })
    }

    /// Convenience builder from typed documents and targets.
    pub fn from_documents(
        query_id: impl Into<String>,
        features: Vec<Vec<f64>>,
        documents: &[&Document],
        targets: &[ExposureDistribution],
    ) -> Result<Self> {
        let mut memberships: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        let mut target_map = BTreeMap::new();
        for target in targets {
            let rows: Result<Vec<Vec<f64>>> = documents
                .iter()
                .map(|d| {
                    d.membership.vector(&target.category).map(<[f64]>::to_vec).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "document '{}' has no membership for category '{}'",
                            d.doc_id, target.category
                        ))
                    })
                })
                .collect();
            memberships.insert(target.category.clone(), rows?);
            target_map.insert(target.category.clone(), target.probabilities.clone());
        }
        Self::new(query_id, features, memberships, target_map)
    }

    /// Number of candidate documents.
    pub fn len(&self) -> usize {
        self.features.len()
    }

    /// True when the instance has no candidates (never after `new`).
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Number of full-batch epochs.
    pub epochs: usize,
    /// Step size.
    pub learning_rate: f64,
    /// Loss weights and smoothing.
    pub loss: FairnessLossConfig,
}

impl TrainConfig {
    /// Defaults: 20 epochs, learning rate 1e-3.
    pub fn new(loss: FairnessLossConfig) -> Self {
        TrainConfig { epochs: 20, learning_rate: 1e-3, loss }
    }
}

/// Per-epoch loss record produced by [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Mean training loss at the start of each epoch (before that epoch's
    /// update).
    pub train_loss: Vec<f64>,
    /// Validation loss at the same parameter snapshots, when a validation
    /// batch was supplied.
    pub validation_loss: Option<Vec<f64>>,
}

impl TrainTrace {
    /// Writes the trace as TSV: `epoch<TAB>train_loss[<TAB>val_loss]`.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        match &self.validation_loss {
            Some(val) => {
                out.push_str("epoch\ttrain_loss\tval_loss\n");
                for (i, (t, v)) in self.train_loss.iter().zip(val).enumerate() {
                    out.push_str(&format!("{}\t{t}\t{v}\n", i + 1));
                }
            }
            None => {
                out.push_str("epoch\ttrain_loss\n");
                for (i, t) in self.train_loss.iter().enumerate() {
                    out.push_str(&format!("{}\t{t}\n", i + 1));
                }
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Mean loss over a batch without computing gradients.
pub fn batch_loss(
    model: &ScorerModel,
    batch: &[QueryCandidates],
    config: &FairnessLossConfig,
) -> Result<f64> {
    Ok(loss_and_gradient(model, batch, config)?.0)
}

/// Mean loss over the batch and its exact gradient with respect to the flat
/// parameter vector.
pub fn loss_and_gradient(
    model: &ScorerModel,
    batch: &[QueryCandidates],
    config: &FairnessLossConfig,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("training batch is empty".into()));
    }
    let delta = config.smoothing;
    if delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "smoothing delta must be positive, got {delta}"
        )));
    }
    let mut total_loss = 0.0;
    let mut grad = vec![0.0; model.params().len()];

    for query in batch {
        let scores = model.score_documents(&query.features)?;
        let probabilities = top_one_fair_probability(&scores)?;
        let n = scores.len();

        // d(query loss)/dP_k, accumulated over categories.
        let mut dp = vec![0.0; n];
        let mut query_loss = 0.0;
        for (category, target) in &query.targets {
            let weight = config.weight(category)?;
            let rows = &query.memberships[category];
            let exposure = exposure_from_probabilities(&probabilities, rows)?;
            let width = exposure.len();
            if target.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "target for '{category}' has {} components, exposure has {width}",
                    target.len()
                )));
            }

            let u_total: f64 = exposure.iter().map(|e| e + delta).sum();
            let v_total: f64 = target.iter().map(|t| t + delta).sum();
            let p: Vec<f64> = exposure.iter().map(|e| (e + delta) / u_total).collect();
            let q: Vec<f64> = target.iter().map(|t| (t + delta) / v_total).collect();
            let log_ratio: Vec<f64> = p.iter().zip(&q).map(|(pi, qi)| (pi / qi).ln()).collect();
            let kl: f64 = p.iter().zip(&log_ratio).map(|(pi, lr)| pi * lr).sum();
            query_loss += weight * kl;

            // dKL/d(exposure_h) = (log_ratio_h - KL) / u_total, then through
            // exposure_h = sum_k P_k * M[k][h].
            for (k, row) in rows.iter().enumerate() {
                let mut acc = 0.0;
                for (h, m) in row.iter().enumerate() {
                    acc += (log_ratio[h] - kl) / u_total * m;
                }
                dp[k] += weight * acc;
            }
        }

        // Softmax backward: ds_j = P_j * (dp_j - sum_k dp_k P_k).
        let mean_dp: f64 = dp.iter().zip(&probabilities).map(|(a, p)| a * p).sum();
        let ds: Vec<f64> = dp
            .iter()
            .zip(&probabilities)
            .map(|(a, p)| p * (a - mean_dp))
            .collect();

        accumulate_param_gradient(model, &query.features, &ds, &mut grad)?;
        total_loss += query_loss;
    }

    let q = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= q);
    Ok((total_loss / q, grad))
}

/// Backpropagates per-document score gradients into the flat parameter
/// gradient, accumulating in place.
fn accumulate_param_gradient(
    model: &ScorerModel,
    features: &[Vec<f64>],
    score_grads: &[f64],
    grad: &mut [f64],
) -> Result<()> {
    let d = model.input_dim();
    match model.architecture() {
        Architecture::Linear => {
            for (x, gs) in features.iter().zip(score_grads) {
                for (c, xc) in x.iter().enumerate() {
                    grad[c] += gs * xc;
                }
                grad[d] += gs;
            }
        }
        Architecture::Mlp1 => {
            let h = model.hidden_dim();
            let w2_off = h * d + h;
            let b2_off = h * d + 2 * h;
            let w2: Vec<f64> = model.w2().to_vec();
            for (x, gs) in features.iter().zip(score_grads) {
                let (act, pre) = model.hidden_activations(x);
                for r in 0..h {
                    grad[w2_off + r] += gs * act[r];
                    if pre[r] > 0.0 {
                        let dz = gs * w2[r];
                        for (c, xc) in x.iter().enumerate() {
                            grad[r * d + c] += dz * xc;
                        }
                        grad[h * d + r] += dz;
                    }
                }
                grad[b2_off] += gs;
            }
        }
    }
    Ok(())
}

/// Trains the model in place with full-batch gradient descent, recording the
/// loss before each update. With `learning_rate = 0` the parameters are left
/// untouched. Deterministic given the model's initial state.
pub fn train(
    model: &mut ScorerModel,
    batch: &[QueryCandidates],
    validation: Option<&[QueryCandidates]>,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    if config.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be positive".into()));
    }
    if !config.learning_rate.is_finite() || config.learning_rate < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be finite and >= 0, got {}",
            config.learning_rate
        )));
    }
    let mut train_loss = Vec::with_capacity(config.epochs);
    let mut validation_loss = validation.map(|_| Vec::with_capacity(config.epochs));
    for _ in 0..config.epochs {
        let (loss, grad) = loss_and_gradient(model, batch, &config.loss)?;
        train_loss.push(loss);
        if let (Some(val_batch), Some(trace)) = (validation, validation_loss.as_mut()) {
            trace.push(batch_loss(model, val_batch, &config.loss)?);
        }
        for (p, g) in model.params_mut().iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    Ok(TrainTrace { train_loss, validation_loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::fairness_loss;
    use crate::model::{FairnessCategory, GroupMembership, Schema};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        architecture: Architecture,
    ) -> (ScorerModel, Vec<QueryCandidates>, FairnessLossConfig) {
        let docs = rng.gen_range(2..=5);
        let subgroups = rng.gen_range(2..=3);
        let dim = rng.gen_range(2..=6);
        let hidden = rng.gen_range(2..=4);
        let queries = rng.gen_range(1..=3);
        let model =
            ScorerModel::init(architecture, dim, hidden, Vec::new(), rng.gen()).unwrap();
        let batch: Vec<QueryCandidates> = (0..queries)
            .map(|qi| {
                let features: Vec<Vec<f64>> = (0..docs)
                    .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect();
                let rows: Vec<Vec<f64>> =
                    (0..docs).map(|_| random_distribution(rng, subgroups)).collect();
                QueryCandidates::new(
                    format!("q{qi}"),
                    features,
                    BTreeMap::from([("g".to_string(), rows)]),
                    BTreeMap::from([("g".to_string(), random_distribution(rng, subgroups))]),
                )
                .unwrap()
            })
            .collect();
        let config = FairnessLossConfig::equal(&["g"]);
        (model, batch, config)
    }

    // Independent oracle: central finite differences of the loss.
    fn numeric_gradient(
        model: &ScorerModel,
        batch: &[QueryCandidates],
        config: &FairnessLossConfig,
        h: f64,
    ) -> Vec<f64> {
        (0..model.params().len())
            .map(|i| {
                let mut plus = model.clone();
                plus.params_mut()[i] += h;
                let mut minus = model.clone();
                minus.params_mut()[i] -= h;
                let lp = batch_loss(&plus, batch, config).unwrap();
                let lm = batch_loss(&minus, batch, config).unwrap();
                (lp - lm) / (2.0 * h)
            })
            .collect()
    }

    fn assert_gradient_matches(architecture: Architecture, seed: u64, instances: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..instances {
            let (model, batch, config) = random_instance(&mut rng, architecture);
            let (_, analytic) = loss_and_gradient(&model, &batch, &config).unwrap();
            let numeric = numeric_gradient(&model, &batch, &config, 1e-5);
            for (a, n) in analytic.iter().zip(&numeric) {
                let rel = (a - n).abs() / n.abs().max(1.0);
                assert!(rel < 1e-5, "gradient mismatch: analytic {a}, numeric {n}, rel {rel}");
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences_linear() {
        assert_gradient_matches(Architecture::Linear, 101, 25);
    }

    #[test]
    fn gradient_matches_central_differences_mlp1() {
        assert_gradient_matches(Architecture::Mlp1, 202, 25);
    }

    #[test]
    fn loss_agrees_with_typed_fairness_loss() {
        let schema = Schema::new(vec![FairnessCategory::new(
            "gender",
            vec!["male".into(), "female".into(), "unknown".into()],
        )
        .unwrap()])
        .unwrap();
        let memberships = vec![
            GroupMembership::one_hot(&schema, "gender", "male").unwrap(),
            GroupMembership::one_hot(&schema, "gender", "female").unwrap(),
            GroupMembership::one_hot(&schema, "gender", "unknown").unwrap(),
        ];
        let mut model = ScorerModel::init(Architecture::Linear, 2, 0, Vec::new(), 5).unwrap();
        model.params_mut().copy_from_slice(&[0.8, -0.4, 0.1]);
        let features = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        let scores = model.score_documents(&features).unwrap();

        let target = ExposureDistribution::new("gender", vec![0.6, 0.3, 0.1]).unwrap();
        let config = FairnessLossConfig::equal(&["gender"]);
        let expected = fairness_loss(&scores, &memberships, std::slice::from_ref(&target), &config).unwrap();

        let rows: Vec<Vec<f64>> =
            memberships.iter().map(|m| m.vector("gender").unwrap().to_vec()).collect();
        let query = QueryCandidates::new(
            "q1",
            features,
            BTreeMap::from([("gender".to_string(), rows)]),
            BTreeMap::from([("gender".to_string(), target.probabilities)]),
        )
        .unwrap();
        let (loss, _) = loss_and_gradient(&model, &[query], &config).unwrap();
        assert_abs_diff_eq!(loss, expected, epsilon = 1e-12);
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut model, batch, loss) = random_instance(&mut rng, Architecture::Mlp1);
        let before = model.params().to_vec();
        let config = TrainConfig { epochs: 1, learning_rate: 0.0, loss };
        train(&mut model, &batch, None, &config).unwrap();
        assert_eq!(model.params(), &before[..]);
    }

    #[test]
    fn training_is_deterministic() {
        let make = || {
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            let (mut model, batch, loss) = random_instance(&mut rng, Architecture::Mlp1);
            let config = TrainConfig { epochs: 10, learning_rate: 0.1, loss };
            let trace = train(&mut model, &batch, None, &config).unwrap();
            (model.params().to_vec(), trace)
        };
        let (p1, t1) = make();
        let (p2, t2) = make();
        assert_eq!(p1, p2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn training_drives_achievable_target_to_near_zero_loss() {
        // Two one-hot groups with group-indicator features and an achievable
        // target: gradient descent should push the loss towards zero.
        let features = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let query = QueryCandidates::new(
            "q",
            features,
            BTreeMap::from([("g".to_string(), rows)]),
            BTreeMap::from([("g".to_string(), vec![0.8, 0.2])]),
        )
        .unwrap();
        let mut model = ScorerModel::init(Architecture::Linear, 2, 0, Vec::new(), 3).unwrap();
        let config = TrainConfig {
            epochs: 2000,
            learning_rate: 0.5,
            loss: FairnessLossConfig::equal(&["g"]),
        };
        let trace = train(&mut model, &[query], None, &config).unwrap();
        let last = *trace.train_loss.last().unwrap();
        assert!(last < 1e-3, "loss stayed at {last}");
        assert!(last < trace.train_loss[0]);
    }

    #[test]
    fn trace_records_every_epoch_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mut model, batch, loss) = random_instance(&mut rng, Architecture::Linear);
        let config = TrainConfig { epochs: 5, learning_rate: 0.01, loss };
        let trace = train(&mut model, &batch, Some(&batch), &config).unwrap();
        assert_eq!(trace.train_loss.len(), 5);
        assert_eq!(trace.validation_loss.as_ref().unwrap().len(), 5);
    }

    #[test]
    fn trace_tsv_roundtrips_through_disk() {
        let trace = TrainTrace {
            train_loss: vec![0.5, 0.25],
            validation_loss: Some(vec![0.6, 0.3]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.tsv");
        trace.write_tsv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "epoch\ttrain_loss\tval_loss\n1\t0.5\t0.6\n2\t0.25\t0.3\n");
    }

    #[test]
    fn empty_batch_is_rejected() {
        let model = ScorerModel::init(Architecture::Linear, 2, 0, Vec::new(), 0).unwrap();
        let config = FairnessLossConfig::equal(&["g"]);
        assert!(loss_and_gradient(&model, &[], &config).is_err());
    }
}
