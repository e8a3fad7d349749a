//! Greedy construction of explanation subgraphs under a node-count window.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Config, Coverage};
use crate::gnn::{forward, is_explanation, GcnModel, ModelError};
use crate::graph::{ClassLabel, Graph, GraphDatabase, GraphId, InducedSubgraph, NodeId, NodeSet};
use crate::influence::{influence_table, InfluenceTable};
use crate::scoring::{Objective, ScoreState};

#[derive(Debug, Error, PartialEq)]
pub enum ExplainError {
    #[error("graph is classified as {actual}, not the requested label {requested}")]
    LabelMismatch {
        requested: ClassLabel,
        actual: ClassLabel,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A node-induced subgraph that the model classifies like its source graph
/// and whose removal changes the source graph's label.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationSubgraph {
    pub source: GraphId,
    pub label: ClassLabel,
    /// Node ids in the source graph.
    pub nodes: NodeSet,
    pub subgraph: InducedSubgraph,
}

impl ExplanationSubgraph {
    pub fn new(source: GraphId, label: ClassLabel, g: &Graph, nodes: NodeSet) -> Self {
        let subgraph = g.induced_subgraph(&nodes);
        ExplanationSubgraph {
            source,
            label,
            nodes,
            subgraph,
        }
    }
}

/// Whether adding `v` to `nodes` keeps the set within `window` and yields an
/// explanation subgraph for `label`.
pub fn can_extend(
    m: &GcnModel,
    g: &Graph,
    nodes: &NodeSet,
    v: NodeId,
    label: ClassLabel,
    window: Coverage,
) -> bool {
    if nodes.contains(&v) || nodes.len() + 1 > window.upper {
        return false;
    }
    let mut grown = nodes.clone();
    grown.insert(v);
    is_explanation(m, g, &grown, label)
}

/// Candidate with the largest marginal gain; ties go to the smallest id.
fn best_candidate(
    obj: &Objective,
    st: &ScoreState,
    candidates: impl IntoIterator<Item = NodeId>,
) -> Option<NodeId> {
    let mut best: Option<(NodeId, f64)> = None;
    for v in candidates {
        let (i, d) = st.gain_counts(obj, v);
        let gain = i as f64 + obj.gamma() * d as f64;
        if best.map_or(true, |(_, b)| gain > b) {
            best = Some((v, gain));
        }
    }
    best.map(|(v, _)| v)
}

/// Greedy explanation subgraph of `g` for `label`.
///
/// Each round re-collects the nodes that can extend the current set and adds
/// the one with the largest marginal gain, until the upper bound is reached
/// or nothing qualifies. Nodes that ever qualified are kept as a reservoir;
/// if the set is still below the lower bound it is filled from the reservoir,
/// re-checking each candidate against the grown set. Returns `None` when the
/// lower bound cannot be met or no node qualifies at all.
pub fn explain_graph(
    m: &GcnModel,
    g: &Graph,
    cfg: &Config,
    label: ClassLabel,
    table: &InfluenceTable,
) -> Result<Option<NodeSet>, ExplainError> {
    let actual = forward(m, g)?.label;
    if actual != label {
        return Err(ExplainError::LabelMismatch {
            requested: label,
            actual,
        });
    }
    let window = cfg.coverage_for(label);
    let obj = Objective::new(table, cfg);
    let mut st = obj.state();
    let mut reservoir = NodeSet::new();
    while st.members().len() < window.upper {
        let candidates: Vec<NodeId> = g
            .nodes()
            .filter(|&v| can_extend(m, g, st.members(), v, label, window))
            .collect();
        reservoir.extend(candidates.iter().copied());
        match best_candidate(&obj, &st, candidates) {
            Some(v) => {
                st.insert(&obj, v);
            }
            None => break,
        }
    }
    while st.members().len() < window.lower {
        let candidates: Vec<NodeId> = reservoir
            .iter()
            .copied()
            .filter(|&v| can_extend(m, g, st.members(), v, label, window))
            .collect();
        match best_candidate(&obj, &st, candidates) {
            Some(v) => {
                st.insert(&obj, v);
            }
            None => return Ok(None),
        }
    }
    if st.members().is_empty() {
        return Ok(None);
    }
    Ok(Some(st.members().clone()))
}

/// Explanation subgraphs of one label group, plus the graphs left unexplained.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelExplanations {
    pub subgraphs: Vec<ExplanationSubgraph>,
    pub unexplained: Vec<GraphId>,
}

/// Runs the greedy explainer on every graph of each requested label group.
///
/// Graphs are processed in parallel on the current rayon pool; results are
/// returned in graph-id order.
pub fn explain_database(
    db: &GraphDatabase,
    m: &GcnModel,
    cfg: &Config,
    labels: &[ClassLabel],
) -> Result<BTreeMap<ClassLabel, LabelExplanations>, ExplainError> {
    let mut out = BTreeMap::new();
    for &label in labels {
        let results: Vec<(GraphId, Option<NodeSet>)> = db
            .label_group(label)
            .par_iter()
            .map(|&id| {
                let g = db.graph(id);
                let table = influence_table(m, g, cfg)?;
                Ok((id, explain_graph(m, g, cfg, label, &table)?))
            })
            .collect::<Result<_, ExplainError>>()?;
        let mut entry = LabelExplanations::default();
        for (id, nodes) in results {
            match nodes {
                Some(nodes) => entry
                    .subgraphs
                    .push(ExplanationSubgraph::new(id, label, db.graph(id), nodes)),
                None => entry.unexplained.push(id),
            }
        }
        out.insert(label, entry);
    }
    Ok(out)
}
