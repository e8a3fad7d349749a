//! Deterministic forward inference for a fixed GCN graph classifier.
//!
//! Every convolution computes `X^k = relu(N · X^{k-1} · Θ^k)` with
//! `N = D̂^{-1/2} (A + I) D̂^{-1/2}`. Node embeddings of the last layer are
//! max-pooled into a graph embedding, which a dense head maps to logits.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ClassLabel, Graph, GraphDatabase, Labeled, NodeId, NodeSet};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("model has no convolution layers")]
    NoLayers,
    #[error("layer {layer} expects input dimension {expected}, got {got}")]
    LayerChain {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("classifier expects {expected} inputs, last layer produces {got}")]
    ClassifierInput { expected: usize, got: usize },
    #[error("classifier bias has {got} entries for {expected} classes")]
    BiasLength { expected: usize, got: usize },
    #[error("a classifier needs at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("non-finite weight in {0}")]
    NonFinite(&'static str),
    #[error("graph features have dimension {got}, model expects {expected}")]
    FeatureDim { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Max,
}

/// A pretrained GCN classifier: convolution weights plus a dense head.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    layers: Vec<Array2<f64>>,
    classifier_weight: Array2<f64>,
    classifier_bias: Array1<f64>,
}

impl GcnModel {
    /// `layers[k]` is `D_k × D_{k+1}`; `classifier_weight` is `D_last × t`.
    pub fn new(
        layers: Vec<Array2<f64>>,
        classifier_weight: Array2<f64>,
        classifier_bias: Array1<f64>,
    ) -> Result<Self, ModelError> {
        let first = layers.first().ok_or(ModelError::NoLayers)?;
        let mut dim = first.nrows();
        for (i, w) in layers.iter().enumerate() {
            if w.nrows() != dim {
                return Err(ModelError::LayerChain {
                    layer: i,
                    expected: w.nrows(),
                    got: dim,
                });
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NonFinite("convolution layer"));
            }
            dim = w.ncols();
        }
        if classifier_weight.nrows() != dim {
            return Err(ModelError::ClassifierInput {
                expected: classifier_weight.nrows(),
                got: dim,
            });
        }
        let t = classifier_weight.ncols();
        if t < 2 {
            return Err(ModelError::TooFewClasses(t));
        }
        if classifier_bias.len() != t {
            return Err(ModelError::BiasLength {
                expected: t,
                got: classifier_bias.len(),
            });
        }
        if classifier_weight.iter().chain(classifier_bias.iter()).any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite("classifier"));
        }
        Ok(GcnModel {
            layers,
            classifier_weight,
            classifier_bias,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.classifier_weight.ncols()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers.last().map(|w| w.ncols()).unwrap_or(0)
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    pub fn classifier_weight(&self) -> &Array2<f64> {
        &self.classifier_weight
    }

    pub fn classifier_bias(&self) -> &Array1<f64> {
        &self.classifier_bias
    }

    pub fn activation(&self) -> Activation {
        Activation::Relu
    }

    pub fn pooling(&self) -> Pooling {
        Pooling::Max
    }

    pub(crate) fn check_graph(&self, g: &Graph) -> Result<(), ModelError> {
        if g.feature_dim() != self.feature_dim() {
            return Err(ModelError::FeatureDim {
                expected: self.feature_dim(),
                got: g.feature_dim(),
            });
        }
        Ok(())
    }
}

/// Symmetric-normalized propagation with self-loops, stored row-wise.
pub(crate) struct Propagator {
    /// For each node `v`, `(u, 1/sqrt(d̂_v d̂_u))` over `u ∈ N(v) ∪ {v}`, sorted by `u`.
    pub rows: Vec<Vec<(NodeId, f64)>>,
}

impl Propagator {
    pub fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let deg: Vec<f64> = (0..n).map(|v| (g.degree(v) + 1) as f64).collect();
        let rows = (0..n)
            .map(|v| {
                let mut row: Vec<(NodeId, f64)> = g
                    .neighbors(v)
                    .iter()
                    .map(|&(u, _)| (u, 1.0 / (deg[v] * deg[u]).sqrt()))
                    .collect();
                let pos = row.binary_search_by_key(&v, |&(u, _)| u).unwrap_err();
                row.insert(pos, (v, 1.0 / deg[v]));
                row
            })
            .collect();
        Propagator { rows }
    }

    /// `N · x`.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for (v, row) in self.rows.iter().enumerate() {
            let mut target = out.row_mut(v);
            for &(u, c) in row {
                target.scaled_add(c, &x.row(u));
            }
        }
        out
    }
}

/// Embeddings and prediction for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    /// `layer_embeddings[0]` is the input feature matrix; the last entry is
    /// the output-layer node embedding matrix.
    pub layer_embeddings: Vec<Array2<f64>>,
    pub pooled: Array1<f64>,
    pub logits: Array1<f64>,
    pub probabilities: Array1<f64>,
    pub label: ClassLabel,
}

impl InferenceResult {
    pub fn final_embeddings(&self) -> &Array2<f64> {
        self.layer_embeddings.last().expect("input layer is always present")
    }
}

pub(crate) struct Trace {
    pub propagator: Propagator,
    /// Pre-activation of each convolution layer.
    pub pre: Vec<Array2<f64>>,
    pub result: InferenceResult,
}

pub(crate) fn feature_matrix(g: &Graph) -> Array2<f64> {
    let n = g.node_count();
    let d = g.feature_dim();
    let mut x = Array2::zeros((n, d));
    for v in 0..n {
        for (j, &f) in g.features(v).iter().enumerate() {
            x[[v, j]] = f;
        }
    }
    x
}

pub(crate) fn forward_trace(m: &GcnModel, g: &Graph) -> Result<Trace, ModelError> {
    m.check_graph(g)?;
    let propagator = Propagator::new(g);
    let mut embeddings = vec![feature_matrix(g)];
    let mut pre = Vec::with_capacity(m.depth());
    for w in &m.layers {
        let z = propagator.apply(embeddings.last().unwrap()).dot(w);
        embeddings.push(z.mapv(|a| a.max(0.0)));
        pre.push(z);
    }
    let last = embeddings.last().unwrap();
    let mut pooled = Array1::zeros(m.embedding_dim());
    if last.nrows() > 0 {
        for (c, col) in last.columns().into_iter().enumerate() {
            pooled[c] = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let logits = pooled.dot(&m.classifier_weight) + &m.classifier_bias;
    let probabilities = softmax(&logits);
    let label = argmax(&logits);
    Ok(Trace {
        propagator,
        pre,
        result: InferenceResult {
            layer_embeddings: embeddings,
            pooled,
            logits,
            probabilities,
            label,
        },
    })
}

/// Runs the classifier on `g`. An empty graph pools to the zero vector, so its
/// logits equal the classifier bias.
pub fn forward(m: &GcnModel, g: &Graph) -> Result<InferenceResult, ModelError> {
    forward_trace(m, g).map(|t| t.result)
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.mapv(|z| (z - max).exp());
    let total = exp.sum();
    exp / total
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(xs: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Whether `nodes` induces an explanation subgraph of `g` for `label`: the
/// induced part is classified `label` and the rest of the graph is not.
pub fn is_explanation(m: &GcnModel, g: &Graph, nodes: &NodeSet, label: ClassLabel) -> bool {
    if nodes.is_empty() {
        return false;
    }
    let kept = g.induced_subgraph(nodes);
    let consistent = forward(m, &kept).map(|r| r.label == label).unwrap_or(false);
    if !consistent {
        return false;
    }
    let rest = g.remove_subgraph(nodes);
    forward(m, &rest).map(|r| r.label != label).unwrap_or(false)
}

/// Classifies every graph and records the label in the database.
pub fn classify_database(m: &GcnModel, db: &mut GraphDatabase) -> Result<(), ModelError> {
    for id in 0..db.len() {
        let label = forward(m, db.graph(id))?.label;
        db.assign_label(id, label);
    }
    Ok(())
}
