//! End-to-end view generation over a classified database.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::explain::{explain_database, ExplainError};
use crate::gnn::GcnModel;
use crate::graph::{ClassLabel, GraphDatabase, GraphId};
use crate::stream::{stream_database, StreamError};
use crate::summarize::{summarize, ExplanationView, SummarizeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Greedy explainer followed by pattern summarization.
    #[default]
    Approx,
    /// Node-streaming explainer with incrementally maintained patterns.
    Stream,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
}

/// A view together with the graphs of its label group that have no
/// explanation subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedView {
    pub view: ExplanationView,
    pub unexplained: Vec<GraphId>,
}

/// One view per requested label, in the order given. `db` must already carry
/// the model's labels (see [`crate::gnn::classify_database`]).
pub fn generate_views(
    db: &GraphDatabase,
    m: &GcnModel,
    cfg: &Config,
    labels: &[ClassLabel],
    algorithm: Algorithm,
) -> Result<Vec<GeneratedView>, PipelineError> {
    match algorithm {
        Algorithm::Approx => {
            let found = explain_database(db, m, cfg, labels)?;
            labels
                .iter()
                .map(|l| {
                    let e = found.get(l).cloned().unwrap_or_default();
                    Ok(GeneratedView {
                        view: summarize(*l, e.subgraphs, cfg)?,
                        unexplained: e.unexplained,
                    })
                })
                .collect()
        }
        Algorithm::Stream => {
            let found = stream_database(db, m, cfg, labels)?;
            Ok(labels
                .iter()
                .map(|l| {
                    let s = found.get(l).cloned().expect("one result per label");
                    GeneratedView {
                        view: s.view,
                        unexplained: s.unexplained,
                    }
                })
                .collect())
        }
    }
}
