//! Three-step view verification.
//!
//! * C1: the structure is a graph view: every subgraph is the node-induced
//!   subgraph of an existing source graph on valid node ids, and every
//!   pattern is a non-empty connected graph.
//! * C2: it is an explanation view of the label group: every subgraph is
//!   consistent and counterfactual for the label, and every graph the model
//!   assigns the label either has a subgraph or is declared unexplained.
//! * C3: it properly covers the group: the patterns cover every subgraph node
//!   and each subgraph size lies in the label's coverage window.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::gnn::{forward, is_explanation, GcnModel, ModelError};
use crate::graph::{connected_components, GraphDatabase, GraphId, Labeled};
use crate::matching::covers;
use crate::summarize::ExplanationView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Constraint {
    C1,
    C2,
    C3,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::C1 => "C1",
            Constraint::C2 => "C2",
            Constraint::C3 => "C3",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Source graph, when the violation concerns one subgraph or graph.
    pub graph: Option<GraphId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.graph {
            Some(g) => write!(f, "{} (graph {}): {}", self.constraint, g, self.message),
            None => write!(f, "{}: {}", self.constraint, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct constraints that failed, in order.
    pub fn failed(&self) -> BTreeSet<Constraint> {
        self.violations.iter().map(|v| v.constraint).collect()
    }
}

fn violation(constraint: Constraint, graph: Option<GraphId>, message: String) -> Violation {
    Violation {
        constraint,
        graph,
        message,
    }
}

/// Checks `view` against `db`, `m` and the coverage windows of `cfg`.
///
/// `unexplained` lists graphs of the label group for which no explanation
/// subgraph was found; they are exempt from the group completeness check.
/// Subgraphs failing C1 are not checked further.
pub fn verify_view(
    db: &GraphDatabase,
    m: &GcnModel,
    cfg: &Config,
    view: &ExplanationView,
    unexplained: &[GraphId],
) -> Result<VerifyReport, ModelError> {
    let label = view.label;
    let window = cfg.coverage_for(label);
    let mut out = Vec::new();

    for (i, p) in view.patterns.iter().enumerate() {
        if p.node_count() == 0 || connected_components(p).len() != 1 {
            out.push(violation(Constraint::C1, None, format!("pattern {i} is empty or disconnected")));
        }
    }

    let per_subgraph: Vec<Vec<Violation>> = view
        .subgraphs
        .par_iter()
        .map(|s| {
            let id = Some(s.source);
            let mut found = Vec::new();
            if s.source >= db.len() {
                found.push(violation(Constraint::C1, id, "source graph does not exist".into()));
                return Ok(found);
            }
            let g = db.graph(s.source);
            if let Some(&bad) = s.nodes.iter().find(|&&v| v >= g.node_count()) {
                found.push(violation(Constraint::C1, id, format!("node {bad} is out of range")));
                return Ok(found);
            }
            if s.subgraph != g.induced_subgraph(&s.nodes) {
                found.push(violation(
                    Constraint::C1,
                    id,
                    "subgraph is not induced by its node set".into(),
                ));
                return Ok(found);
            }
            if s.label != label {
                found.push(violation(
                    Constraint::C2,
                    id,
                    format!("subgraph is tagged with label {} in the view of {label}", s.label),
                ));
            }
            let actual = forward(m, g)?.label;
            if actual != label {
                found.push(violation(
                    Constraint::C2,
                    id,
                    format!("source graph is classified as {actual}, not {label}"),
                ));
            } else if !is_explanation(m, g, &s.nodes, label) {
                found.push(violation(
                    Constraint::C2,
                    id,
                    "subgraph is not consistent and counterfactual".into(),
                ));
            }
            let all = s.subgraph.nodes().collect();
            let (covered, _) = covers(&view.patterns, &s.subgraph.graph, &all);
            if covered.len() < s.nodes.len() {
                let missing: Vec<_> = all
                    .difference(&covered)
                    .map(|&v| s.subgraph.to_original(v))
                    .collect();
                found.push(violation(
                    Constraint::C3,
                    id,
                    format!("nodes {missing:?} are not covered by any pattern"),
                ));
            }
            if !window.contains(s.nodes.len()) {
                found.push(violation(
                    Constraint::C3,
                    id,
                    format!(
                        "subgraph has {} nodes, outside [{}, {}]",
                        s.nodes.len(),
                        window.lower,
                        window.upper
                    ),
                ));
            }
            Ok(found)
        })
        .collect::<Result<_, ModelError>>()?;
    out.extend(per_subgraph.into_iter().flatten());

    let present: BTreeSet<GraphId> = view.subgraphs.iter().map(|s| s.source).collect();
    let exempt: BTreeSet<GraphId> = unexplained.iter().copied().collect();
    let labels: Vec<(GraphId, usize)> = (0..db.len())
        .into_par_iter()
        .map(|id| Ok((id, forward(m, db.graph(id))?.label)))
        .collect::<Result<_, ModelError>>()?;
    for (id, l) in labels {
        if l == label && !present.contains(&id) && !exempt.contains(&id) {
            out.push(violation(
                Constraint::C2,
                Some(id),
                "graph of the label group has no explanation subgraph".into(),
            ));
        }
    }
    Ok(VerifyReport { violations: out })
}
