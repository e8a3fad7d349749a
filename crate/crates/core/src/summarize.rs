//! Summarizing explanation subgraphs into a small set of covering patterns.
//!
//! Candidates come from frequent-pattern mining over the subgraphs plus one
//! singleton per node type. Each candidate weighs `1 − covered_edges / total_edges`,
//! and a greedy weighted set cover picks patterns until every node is covered.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::dfscode::{canonical_code, mine_frequent, CanonicalCode};
use crate::explain::ExplanationSubgraph;
use crate::graph::{ClassLabel, Edge, GraphId, Labeled, NodeId, Pattern};
use crate::matching::covers;

/// A node of an explanation subgraph, by source graph and original id.
pub type ViewNode = (GraphId, NodeId);
/// An edge of an explanation subgraph, by source graph and original endpoints.
pub type ViewEdge = (GraphId, Edge);

#[derive(Debug, Error, PartialEq)]
pub enum SummarizeError {
    #[error("{0} explanation nodes cannot be covered by any candidate pattern")]
    Uncoverable(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternCandidate {
    pub pattern: Pattern,
    pub code: CanonicalCode,
    pub covered_nodes: BTreeSet<ViewNode>,
    pub covered_edges: BTreeSet<ViewEdge>,
    pub weight: f64,
}

/// Nodes and edges of `subgraphs` matched by `p`.
pub fn pattern_coverage(
    p: &Pattern,
    subgraphs: &[ExplanationSubgraph],
) -> (BTreeSet<ViewNode>, BTreeSet<ViewEdge>) {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for s in subgraphs {
        let sub = &s.subgraph;
        let all = sub.nodes().collect();
        let (n, e) = covers(std::slice::from_ref(p), &sub.graph, &all);
        nodes.extend(n.into_iter().map(|v| (s.source, sub.to_original(v))));
        edges.extend(e.into_iter().map(|e| {
            (
                s.source,
                Edge::new(sub.to_original(e.u), sub.to_original(e.v), e.edge_type),
            )
        }));
    }
    (nodes, edges)
}

pub fn all_nodes(subgraphs: &[ExplanationSubgraph]) -> BTreeSet<ViewNode> {
    subgraphs
        .iter()
        .flat_map(|s| s.nodes.iter().map(move |&v| (s.source, v)))
        .collect()
}

pub fn all_edges(subgraphs: &[ExplanationSubgraph]) -> BTreeSet<ViewEdge> {
    subgraphs
        .iter()
        .flat_map(|s| {
            s.subgraph.edge_list().into_iter().map(move |e| {
                (
                    s.source,
                    Edge::new(
                        s.subgraph.to_original(e.u),
                        s.subgraph.to_original(e.v),
                        e.edge_type,
                    ),
                )
            })
        })
        .collect()
}

/// `1 − covered / total`, or 0 when there are no edges to cover.
pub fn edge_weight(covered: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        1.0 - covered as f64 / total as f64
    }
}

pub fn candidate(p: Pattern, subgraphs: &[ExplanationSubgraph], total_edges: usize) -> PatternCandidate {
    let (covered_nodes, covered_edges) = pattern_coverage(&p, subgraphs);
    PatternCandidate {
        code: canonical_code(&p),
        weight: edge_weight(covered_edges.len(), total_edges),
        pattern: p,
        covered_nodes,
        covered_edges,
    }
}

/// Frequent patterns of the subgraphs plus a singleton for every node type,
/// keeping those that cover at least one node, sorted by canonical code.
pub fn mine_candidates(subgraphs: &[ExplanationSubgraph], cfg: &Config) -> Vec<PatternCandidate> {
    let graphs: Vec<_> = subgraphs.iter().map(|s| s.subgraph.graph.clone()).collect();
    let mut patterns: Vec<Pattern> = mine_frequent(&graphs, cfg.pattern_min_support, cfg.pattern_max_nodes)
        .into_iter()
        .map(|m| m.pattern)
        .collect();
    let types: BTreeSet<_> = graphs.iter().flat_map(|g| g.node_types().to_vec()).collect();
    patterns.extend(types.into_iter().map(Pattern::singleton));
    let total_edges = all_edges(subgraphs).len();
    let mut out: Vec<PatternCandidate> = patterns
        .into_par_iter()
        .map(|p| candidate(p, subgraphs, total_edges))
        .filter(|c| !c.covered_nodes.is_empty())
        .collect();
    out.sort_by(|a, b| a.code.cmp(&b.code));
    out.dedup_by(|a, b| a.code == b.code);
    out
}

fn rank(a: (&PatternCandidate, usize), b: (&PatternCandidate, usize)) -> Ordering {
    let (ca, na) = a;
    let (cb, nb) = b;
    let free = |c: &PatternCandidate| c.weight == 0.0;
    let by_ratio = match (free(ca), free(cb)) {
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (true, true) => Ordering::Equal,
        (false, false) => (na as f64 / ca.weight)
            .partial_cmp(&(nb as f64 / cb.weight))
            .unwrap_or(Ordering::Equal),
    };
    by_ratio
        .then(na.cmp(&nb))
        .then(cb.weight.partial_cmp(&ca.weight).unwrap_or(Ordering::Equal))
        .then(cb.code.cmp(&ca.code))
}

/// Greedy weighted set cover of `universe` by the candidates' node sets.
///
/// Each round picks the candidate with the most newly covered nodes per unit
/// weight; zero-weight candidates come first. Ties prefer more new nodes,
/// then lower weight, then the smaller canonical code. Returns the chosen
/// indices in selection order.
pub fn greedy_cover(
    candidates: &[PatternCandidate],
    universe: &BTreeSet<ViewNode>,
) -> Result<Vec<usize>, SummarizeError> {
    let mut uncovered = universe.clone();
    let mut chosen = Vec::new();
    let mut used = vec![false; candidates.len()];
    while !uncovered.is_empty() {
        let best = candidates
            .iter()
            .enumerate()
            .filter(|&(i, _)| !used[i])
            .map(|(i, c)| (i, c, c.covered_nodes.intersection(&uncovered).count()))
            .filter(|&(_, _, n)| n > 0)
            .max_by(|a, b| rank((a.1, a.2), (b.1, b.2)));
        let Some((i, c, _)) = best else {
            return Err(SummarizeError::Uncoverable(uncovered.len()));
        };
        used[i] = true;
        chosen.push(i);
        for v in &c.covered_nodes {
            uncovered.remove(v);
        }
    }
    Ok(chosen)
}

/// Node and edge coverage of a view's subgraphs by its patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CoverageReport {
    pub nodes_covered: usize,
    pub nodes_total: usize,
    pub edges_covered: usize,
    pub edges_total: usize,
}

impl CoverageReport {
    pub fn of(patterns: &[Pattern], subgraphs: &[ExplanationSubgraph]) -> Self {
        let mut nodes = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for p in patterns {
            let (n, e) = pattern_coverage(p, subgraphs);
            nodes.extend(n);
            edges.extend(e);
        }
        CoverageReport {
            nodes_covered: nodes.len(),
            nodes_total: all_nodes(subgraphs).len(),
            edges_covered: edges.len(),
            edges_total: all_edges(subgraphs).len(),
        }
    }

    /// Percentage of subgraph edges not covered by any pattern.
    pub fn edge_loss(&self) -> f64 {
        if self.edges_total == 0 {
            0.0
        } else {
            100.0 * (self.edges_total - self.edges_covered) as f64 / self.edges_total as f64
        }
    }

    pub fn fully_covers_nodes(&self) -> bool {
        self.nodes_covered == self.nodes_total
    }
}

/// Patterns for one class label together with the subgraphs they summarize.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationView {
    pub label: ClassLabel,
    pub patterns: Vec<Pattern>,
    pub subgraphs: Vec<ExplanationSubgraph>,
    pub coverage: CoverageReport,
}

impl ExplanationView {
    pub fn new(label: ClassLabel, patterns: Vec<Pattern>, subgraphs: Vec<ExplanationSubgraph>) -> Self {
        let coverage = CoverageReport::of(&patterns, &subgraphs);
        ExplanationView {
            label,
            patterns,
            subgraphs,
            coverage,
        }
    }
}

/// Mines candidates and greedily selects a node-covering pattern set.
pub fn summarize(
    label: ClassLabel,
    subgraphs: Vec<ExplanationSubgraph>,
    cfg: &Config,
) -> Result<ExplanationView, SummarizeError> {
    let candidates = mine_candidates(&subgraphs, cfg);
    let chosen = greedy_cover(&candidates, &all_nodes(&subgraphs))?;
    let patterns = chosen.into_iter().map(|i| candidates[i].pattern.clone()).collect();
    Ok(ExplanationView::new(label, patterns, subgraphs))
}
