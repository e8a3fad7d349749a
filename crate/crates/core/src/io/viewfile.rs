//! Self-contained JSON record of generated views.
//!
//! A view file echoes the configuration and algorithm that produced it and
//! stores, per label, the patterns, the explanation subgraphs as source graph
//! id plus node ids, the graphs left unexplained and a coverage summary. It
//! can be re-verified against the dataset and weights without recomputing
//! anything.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::explain::ExplanationSubgraph;
use crate::gnn::{GcnModel, ModelError};
use crate::graph::{ClassLabel, Graph, GraphDatabase, GraphId, InducedSubgraph, Labeled, NodeId, Pattern};
use crate::io::{read_to_string, write_string, IoError};
use crate::metrics::{compression, edge_loss};
use crate::pipeline::{Algorithm, GeneratedView};
use crate::summarize::{CoverageReport, ExplanationView};
use crate::verify::{verify_view, VerifyReport};

pub const VIEWS_SCHEMA: &str = "exview-views";
pub const VIEWS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgraphRecord {
    pub source: GraphId,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSummary {
    pub subgraph_nodes: usize,
    pub subgraph_edges: usize,
    pub pattern_nodes: usize,
    pub pattern_edges: usize,
    pub compression: f64,
    pub edge_loss_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewRecord {
    pub label: ClassLabel,
    pub patterns: Vec<Pattern>,
    pub subgraphs: Vec<SubgraphRecord>,
    pub unexplained: Vec<GraphId>,
    pub coverage: CoverageReport,
    pub summary: ViewSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewFile {
    pub schema: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub config: Config,
    pub views: Vec<ViewRecord>,
}

impl ViewRecord {
    pub fn new(g: &GeneratedView) -> Self {
        let v = &g.view;
        let one = std::slice::from_ref(v);
        ViewRecord {
            label: v.label,
            patterns: v.patterns.clone(),
            subgraphs: v
                .subgraphs
                .iter()
                .map(|s| SubgraphRecord {
                    source: s.source,
                    nodes: s.nodes.iter().copied().collect(),
                })
                .collect(),
            unexplained: g.unexplained.clone(),
            coverage: v.coverage.clone(),
            summary: ViewSummary {
                subgraph_nodes: v.subgraphs.iter().map(|s| s.subgraph.node_count()).sum(),
                subgraph_edges: v.subgraphs.iter().map(|s| s.subgraph.edge_count()).sum(),
                pattern_nodes: v.patterns.iter().map(|p| p.node_count()).sum(),
                pattern_edges: v.patterns.iter().map(|p| p.edge_count()).sum(),
                compression: compression(one),
                edge_loss_pct: edge_loss(one),
            },
        }
    }

    /// Rebuilds the in-memory view against `db`. References to missing graphs
    /// or nodes are kept with an empty subgraph so that verification can
    /// report them.
    pub fn to_view(&self, db: &GraphDatabase) -> GeneratedView {
        let subgraphs = self
            .subgraphs
            .iter()
            .map(|r| {
                let nodes = r.nodes.iter().copied().collect();
                let valid = r.source < db.len() && r.nodes.iter().all(|&v| v < db.graph(r.source).node_count());
                if valid {
                    ExplanationSubgraph::new(r.source, self.label, db.graph(r.source), nodes)
                } else {
                    ExplanationSubgraph {
                        source: r.source,
                        label: self.label,
                        nodes,
                        subgraph: InducedSubgraph {
                            graph: Graph::new(0),
                            original_ids: vec![],
                        },
                    }
                }
            })
            .collect();
        GeneratedView {
            view: ExplanationView::new(self.label, self.patterns.clone(), subgraphs),
            unexplained: self.unexplained.clone(),
        }
    }
}

impl ViewFile {
    pub fn new(algorithm: Algorithm, config: &Config, views: &[GeneratedView]) -> Self {
        ViewFile {
            schema: VIEWS_SCHEMA.into(),
            version: VIEWS_VERSION,
            algorithm,
            config: config.clone(),
            views: views.iter().map(ViewRecord::new).collect(),
        }
    }

    pub fn to_views(&self, db: &GraphDatabase) -> Vec<GeneratedView> {
        self.views.iter().map(|v| v.to_view(db)).collect()
    }

    /// Checks every view under the echoed configuration.
    pub fn verify(&self, db: &GraphDatabase, m: &GcnModel) -> Result<VerifyReport, ModelError> {
        let mut report = VerifyReport::default();
        for g in self.to_views(db) {
            report
                .violations
                .extend(verify_view(db, m, &self.config, &g.view, &g.unexplained)?.violations);
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("views serialize") + "\n"
    }

    pub fn from_json(path: &Path, text: &str) -> Result<Self, IoError> {
        let f: ViewFile = serde_json::from_str(text).map_err(|e| IoError::parse(path, e.line(), e.to_string()))?;
        if f.schema != VIEWS_SCHEMA || f.version != VIEWS_VERSION {
            return Err(IoError::invalid(
                path,
                format!("unsupported schema {:?} version {}", f.schema, f.version),
            ));
        }
        f.config.validate().map_err(|e| IoError::invalid(path, e.to_string()))?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_json(path, &read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_string(path, &self.to_json())
    }
}
