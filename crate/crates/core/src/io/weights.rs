//! JSON interchange of GCN weights.
//!
//! ```json
//! {
//!   "schema": "exview-weights",
//!   "version": 1,
//!   "feature_dim": 3,
//!   "num_classes": 2,
//!   "activation": "relu",
//!   "pooling": "max",
//!   "layers": [[[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]],
//!   "classifier": { "weight": [[1.0, -1.0], [0.0, 2.0]], "bias": [0.0, 0.1] }
//! }
//! ```
//!
//! Matrices are lists of rows. Layer `k` has one row per input channel and one
//! column per output channel; the classifier weight has one row per channel
//! of the last layer and one column per class.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::gnn::{Activation, GcnModel, Pooling};
use crate::io::{read_to_string, write_string, IoError};

pub const WEIGHTS_SCHEMA: &str = "exview-weights";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierRecord {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub schema: String,
    pub version: u32,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub activation: Activation,
    pub pooling: Pooling,
    pub layers: Vec<Vec<Vec<f64>>>,
    pub classifier: ClassifierRecord,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("{what} has rows of different lengths"));
    }
    Array2::from_shape_vec((rows.len(), cols), rows.concat()).map_err(|e| format!("{what}: {e}"))
}

impl WeightsFile {
    pub fn from_model(m: &GcnModel) -> Self {
        WeightsFile {
            schema: WEIGHTS_SCHEMA.into(),
            version: WEIGHTS_VERSION,
            feature_dim: m.feature_dim(),
            num_classes: m.num_classes(),
            activation: m.activation(),
            pooling: m.pooling(),
            layers: m.layers().iter().map(rows).collect(),
            classifier: ClassifierRecord {
                weight: rows(m.classifier_weight()),
                bias: m.classifier_bias().to_vec(),
            },
        }
    }

    /// Builds and validates the model.
    pub fn to_model(&self) -> Result<GcnModel, String> {
        if self.schema != WEIGHTS_SCHEMA {
            return Err(format!("schema is {:?}, expected {WEIGHTS_SCHEMA:?}", self.schema));
        }
        if self.version != WEIGHTS_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(k, l)| matrix(l, &format!("layer {k}")))
            .collect::<Result<Vec<_>, _>>()?;
        let weight = matrix(&self.classifier.weight, "classifier weight")?;
        let m = GcnModel::new(layers, weight, Array1::from(self.classifier.bias.clone()))
            .map_err(|e| e.to_string())?;
        if m.feature_dim() != self.feature_dim {
            return Err(format!(
                "feature_dim is {}, but the first layer has {} rows",
                self.feature_dim,
                m.feature_dim()
            ));
        }
        if m.num_classes() != self.num_classes {
            return Err(format!(
                "num_classes is {}, but the classifier has {} columns",
                self.num_classes,
                m.num_classes()
            ));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }
}

pub fn load_weights(path: &Path) -> Result<GcnModel, IoError> {
    let text = read_to_string(path)?;
    let file: WeightsFile = serde_json::from_str(&text).map_err(|e| IoError::parse(path, e.line(), e.to_string()))?;
    file.to_model().map_err(|e| IoError::invalid(path, e))
}

pub fn save_weights(m: &GcnModel, path: &Path) -> Result<(), IoError> {
    write_string(path, &WeightsFile::from_model(m).to_json())
}
