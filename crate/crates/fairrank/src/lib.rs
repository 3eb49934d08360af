//! Fairness-aware re-ranking toolkit.
//!
//! The crate trains a scorer that predicts, per document, how much a ranking
//! slot spent on it advances group-fairness goals, using only group
//! membership and relevance judgments as supervision. Around that core it
//! provides BM25/RM3 retrieval over an inverted index, feature extraction
//! from embeddings, score blending with a relevance/fairness trade-off knob,
//! exposure-based evaluation, reranking baselines, and a synthetic corpus
//! generator for end-to-end experiments.
//!
//! Every random choice flows from a caller-supplied seed and every
//! collection iterates in a stable order, so identical inputs produce
//! byte-identical outputs.

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod baselines;
pub mod blend;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod exposure;
pub mod features;
pub mod manifest;
pub mod model;
pub mod retrieval;
pub mod scorer;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
