//! Blending of relevance and fairness scores into a final ranking, plus the
//! sweep over the preference parameter alpha.
//!
//! The final score is `(1 - alpha) * R + alpha * F`. Because the two scores
//! live on incomparable scales, both are min-max normalized within each
//! query's candidate list by default; `normalize: false` blends the raw
//! scores instead. A constant score list normalizes to all 0.5 so the other
//! component alone decides the order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::evaluate_run;
use crate::model::{Corpus, Judgment, RankedEntry, RankedList, Schema};

/// One document entering the blend with its two raw scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Document identifier.
    pub doc_id: String,
    /// Relevance-side score (e.g. BM25).
    pub relevance: f64,
    /// Fairness-side score (e.g. trained scorer output).
    pub fairness: f64,
}

/// Blend settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendConfig {
    /// Preference weight on the fairness score, in [0, 1].
    pub alpha: f64,
    /// Min-max normalize both score lists per query before blending.
    pub normalize: bool,
}

impl BlendConfig {
    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Min-max normalizes to [0, 1]; a constant list maps to all 0.5.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

/// Blends one query's candidates and ranks them by the blended score,
/// descending with ties broken by ascending document id. Entries keep the
/// raw relevance and fairness scores.
pub fn blend_and_rank(
    query_id: &str,
    candidates: &[Candidate],
    config: &BlendConfig,
) -> Result<RankedList> {
    config.validate()?;
    if candidates.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "query '{query_id}' has no candidates to blend"
        )));
    }
    let relevance: Vec<f64> = candidates.iter().map(|c| c.relevance).collect();
    let fairness: Vec<f64> = candidates.iter().map(|c| c.fairness).collect();
    let (r, f) = if config.normalize {
        (min_max_normalize(&relevance), min_max_normalize(&fairness))
    } else {
        (relevance, fairness)
    };
    let entries = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| RankedEntry {
            doc_id: c.doc_id.clone(),
            relevance: c.relevance,
            fairness: c.fairness,
            blended: (1.0 - config.alpha) * r[i] + config.alpha * f[i],
        })
        .collect();
    Ok(RankedList::new(query_id, entries))
}

/// One row of an alpha sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Blend weight this row was computed at.
    pub alpha: f64,
    /// Mean AWRF at the sweep's cutoff.
    pub awrf: f64,
    /// Mean nDCG at the sweep's cutoff.
    pub ndcg: f64,
    /// awrf * ndcg.
    pub product: f64,
}

/// Everything a sweep evaluates against.
#[derive(Debug, Clone, Copy)]
pub struct SweepInputs<'a> {
    /// Per-query candidate lists, run order preserved.
    pub candidates: &'a [(String, Vec<Candidate>)],
    /// Relevance judgments.
    pub qrels: &'a [Judgment],
    /// Corpus providing group memberships.
    pub corpus: &'a Corpus,
    /// Fairness categories to evaluate.
    pub schema: &'a Schema,
    /// Metric cutoff.
    pub k: usize,
}

/// Evaluates the blend at every alpha on the grid `0, step, 2*step, ..., 1`.
/// `step` must divide 1 evenly; the default 0.01 yields 101 rows. Grid
/// points are computed as `i / count` so both endpoints are exact.
pub fn sweep_alpha(
    inputs: &SweepInputs<'_>,
    step: f64,
    normalize: bool,
) -> Result<Vec<SweepRow>> {
    if !step.is_finite() || step <= 0.0 || step > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "step must lie in (0, 1], got {step}"
        )));
    }
    let count = (1.0 / step).round();
    if (count * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("step {step} does not divide 1 evenly")));
    }
    let count = count as usize;
    let mut rows = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let alpha = i as f64 / count as f64;
        let config = BlendConfig { alpha, normalize };
        let lists: Result<Vec<RankedList>> = inputs
            .candidates
            .iter()
            .map(|(qid, cands)| blend_and_rank(qid, cands, &config))
            .collect();
        let report = evaluate_run(&lists?, inputs.qrels, inputs.corpus, inputs.schema, inputs.k)?;
        rows.push(SweepRow {
            alpha,
            awrf: report.mean_awrf,
            ndcg: report.mean_ndcg,
            product: report.product,
        });
    }
    Ok(rows)
}

/// Writes sweep rows as TSV with header `alpha awrf@k ndcg@k product`.
pub fn write_sweep_tsv(path: impl AsRef<Path>, rows: &[SweepRow], k: usize) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("alpha\tawrf@{k}\tndcg@{k}\tproduct\n");
    for row in rows {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", row.alpha, row.awrf, row.ndcg, row.product));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
