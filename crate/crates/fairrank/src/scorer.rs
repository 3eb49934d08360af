//! Scoring models: a linear scorer and a one-hidden-layer ReLU MLP over
//! feature vectors, with versioned JSON persistence.
//!
//! Parameters live in one flat vector. Layouts:
//! - linear: `[w_0 .. w_{d-1}, b]`
//! - mlp1:   `[W1 row-major (hidden x input), b1, w2, b2]`

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model file format version this build reads and writes.
pub const MODEL_FILE_VERSION: u32 = 1;

/// Scorer architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// Single linear layer.
    Linear,
    /// One hidden ReLU layer followed by a linear output.
    Mlp1,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Linear => write!(f, "linear"),
            Architecture::Mlp1 => write!(f, "mlp1"),
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Architecture::Linear),
            "mlp1" => Ok(Architecture::Mlp1),
            other => Err(Error::InvalidArgument(format!(
                "unknown architecture '{other}' (expected 'linear' or 'mlp1')"
            ))),
        }
    }
}

/// A fairness scorer: maps a feature vector to a single real score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    architecture: Architecture,
    input_dim: usize,
    hidden_dim: usize,
    seed: u64,
    feature_schema: Vec<String>,
    params: Vec<f64>,
}

impl ScorerModel {
    /// Initializes a scorer with Xavier-uniform weights (each layer drawn from
    /// `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`) and zero biases.
    /// The draw order is the parameter layout order, so a seed pins every
    /// weight bitwise.
    pub fn init(
        architecture: Architecture,
        input_dim: usize,
        hidden_dim: usize,
        feature_schema: Vec<String>,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input_dim must be positive".into()));
        }
        if !feature_schema.is_empty() && feature_schema.len() != input_dim {
            return Err(Error::DimensionMismatch(format!(
                "feature schema lists {} names but input_dim is {input_dim}",
                feature_schema.len()
            )));
        }
        let hidden_dim = match architecture {
            Architecture::Linear => 0,
            Architecture::Mlp1 => {
                if hidden_dim == 0 {
                    return Err(Error::InvalidArgument(
                        "mlp1 needs a positive hidden_dim".into(),
                    ));
                }
                hidden_dim
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::expected_params(architecture, input_dim, hidden_dim));
        match architecture {
            Architecture::Linear => {
                let limit = (6.0 / (input_dim as f64 + 1.0)).sqrt();
                for _ in 0..input_dim {
                    params.push(rng.gen_range(-limit..limit));
                }
                params.push(0.0); // bias
            }
            Architecture::Mlp1 => {
                let l1 = (6.0 / (input_dim as f64 + hidden_dim as f64)).sqrt();
                for _ in 0..hidden_dim * input_dim {
                    params.push(rng.gen_range(-l1..l1));
                }
                params.extend(std::iter::repeat_n(0.0, hidden_dim)); // b1
                let l2 = (6.0 / (hidden_dim as f64 + 1.0)).sqrt();
                for _ in 0..hidden_dim {
                    params.push(rng.gen_range(-l2..l2));
                }
                params.push(0.0); // b2
            }
        }
        Ok(ScorerModel { architecture, input_dim, hidden_dim, seed, feature_schema, params })
    }

    /// Parameter count for an architecture and its dimensions.
    pub fn expected_params(architecture: Architecture, input_dim: usize, hidden_dim: usize) -> usize {
        match architecture {
            Architecture::Linear => input_dim + 1,
            Architecture::Mlp1 => hidden_dim * input_dim + hidden_dim + hidden_dim + 1,
        }
    }

    /// The architecture.
    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    /// Feature vector length the model expects.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Hidden width (0 for linear).
    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Seed used at initialization.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Feature names the model was trained against (may be empty).
    pub fn feature_schema(&self) -> &[String] {
        &self.feature_schema
    }

    /// Flat parameter vector.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access to the flat parameter vector (training, tests).
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Scores one feature vector.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "feature vector has {} components, model expects {}",
                features.len(),
                self.input_dim
            )));
        }
        Ok(match self.architecture {
            Architecture::Linear => {
                let w = &self.params[..self.input_dim];
                let b = self.params[self.input_dim];
                dot(w, features) + b
            }
            Architecture::Mlp1 => {
                let (hidden, _) = self.hidden_activations(features);
                let w2 = self.w2();
                dot(&hidden, w2) + self.b2()
            }
        })
    }

    /// Scores a batch of feature vectors.
    pub fn score_documents(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        features.iter().map(|f| self.score(f)).collect()
    }

    /// Hidden-layer output and pre-activation for one input (mlp1 only;
    /// the pre-activation is what the backward pass needs for the ReLU gate).
    pub(crate) fn hidden_activations(&self, features: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.hidden_dim;
        let d = self.input_dim;
        let mut pre = vec![0.0; h];
        for (r, slot) in pre.iter_mut().enumerate() {
            let row = &self.params[r * d..(r + 1) * d];
            *slot = dot(row, features) + self.params[h * d + r];
        }
        let act = pre.iter().map(|z| z.max(0.0)).collect();
        (act, pre)
    }

    pub(crate) fn w2(&self) -> &[f64] {
        let h = self.hidden_dim;
        let d = self.input_dim;
        &self.params[h * d + h..h * d + 2 * h]
    }

    pub(crate) fn b2(&self) -> f64 {
        *self.params.last().expect("mlp1 has parameters")
    }

    /// Saves the model as versioned JSON. Saving, loading, and saving again
    /// yields identical bytes.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            architecture: self.architecture.to_string(),
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            seed: self.seed,
            feature_schema: self.feature_schema.clone(),
            weights: self.params.clone(),
        };
        let data = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::ModelCorrupt(e.to_string()))?;
        fs::write(path, data + "\n").map_err(|e| Error::io(path, e))
    }

    /// Loads a model file, with distinct errors for unsupported versions,
    /// undecodable files, and inconsistent dimensions.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        // Check the version before strict decoding so old/new formats report
        // a version error rather than a generic parse failure.
        let probe: serde_json::Value =
            serde_json::from_str(&data).map_err(|e| Error::ModelCorrupt(e.to_string()))?;
        match probe.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == MODEL_FILE_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::ModelVersion { found: v as u32, expected: MODEL_FILE_VERSION })
            }
            None => return Err(Error::ModelCorrupt("missing version field".into())),
        }
        let file: ModelFile =
            serde_json::from_str(&data).map_err(|e| Error::ModelCorrupt(e.to_string()))?;
        let architecture = Architecture::from_str(&file.architecture)
            .map_err(|_| Error::ModelCorrupt(format!("unknown architecture '{}'", file.architecture)))?;
        let expected = Self::expected_params(architecture, file.input_dim, file.hidden_dim);
        if file.weights.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "model file carries {} weights, {architecture} with input_dim {} and hidden_dim {} needs {expected}",
                file.weights.len(),
                file.input_dim,
                file.hidden_dim
            )));
        }
        if !file.feature_schema.is_empty() && file.feature_schema.len() != file.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "model file lists {} feature names but input_dim is {}",
                file.feature_schema.len(),
                file.input_dim
            )));
        }
        Ok(ScorerModel {
            architecture,
            input_dim: file.input_dim,
            hidden_dim: file.hidden_dim,
            seed: file.seed,
            feature_schema: file.feature_schema,
            params: file.weights,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    architecture: String,
    input_dim: usize,
    hidden_dim: usize,
    seed: u64,
    feature_schema: Vec<String>,
    weights: Vec<f64>,
}
