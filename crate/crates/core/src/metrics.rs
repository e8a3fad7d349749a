//! Faithfulness and conciseness measures for explanation views.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dfscode::canonical_code;
use crate::gnn::{forward, GcnModel, ModelError};
use crate::graph::{ClassLabel, Graph, GraphDatabase, GraphId, Labeled, NodeSet};
use crate::summarize::{CoverageReport, ExplanationView};

/// Probability that `m` assigns `label` to `g`.
pub fn label_probability(m: &GcnModel, g: &Graph, label: ClassLabel) -> Result<f64, ModelError> {
    Ok(forward(m, g)?.probabilities[label])
}

/// Probability drop for `label` after deleting `nodes` (and their edges) from `g`.
/// An empty node set gives 0.
pub fn graph_fidelity_plus(
    m: &GcnModel,
    g: &Graph,
    nodes: &NodeSet,
    label: ClassLabel,
) -> Result<f64, ModelError> {
    if nodes.is_empty() {
        return Ok(0.0);
    }
    let rest = g.remove_subgraph(nodes);
    Ok(label_probability(m, g, label)? - label_probability(m, &rest.graph, label)?)
}

/// Probability drop for `label` when only the subgraph induced by `nodes` is
/// kept. `None` for an empty node set.
pub fn graph_fidelity_minus(
    m: &GcnModel,
    g: &Graph,
    nodes: &NodeSet,
    label: ClassLabel,
) -> Result<Option<f64>, ModelError> {
    if nodes.is_empty() {
        return Ok(None);
    }
    let kept = g.induced_subgraph(nodes);
    Ok(Some(label_probability(m, g, label)? - label_probability(m, &kept.graph, label)?))
}

/// `1 - (|V_s| + |E_s|) / (|V| + |E|)` for the subgraph induced by `nodes`.
pub fn graph_sparsity(g: &Graph, nodes: &NodeSet) -> f64 {
    let total = g.node_count() + g.edge_count();
    if total == 0 {
        return 1.0;
    }
    let sub = g.induced_subgraph(nodes);
    1.0 - (sub.node_count() + sub.edge_count()) as f64 / total as f64
}

/// Size reduction of the pattern tier over the subgraph tier. Each distinct
/// pattern (up to isomorphism) is counted once across all views.
pub fn compression(views: &[ExplanationView]) -> f64 {
    let mut seen = BTreeSet::new();
    let mut pattern_size = 0usize;
    for p in views.iter().flat_map(|v| &v.patterns) {
        if seen.insert(canonical_code(p)) {
            pattern_size += p.node_count() + p.edge_count();
        }
    }
    let subgraph_size: usize = views
        .iter()
        .flat_map(|v| &v.subgraphs)
        .map(|s| s.subgraph.node_count() + s.subgraph.edge_count())
        .sum();
    if subgraph_size == 0 {
        return 0.0;
    }
    1.0 - pattern_size as f64 / subgraph_size as f64
}

/// Percentage of subgraph edges that no pattern covers, over all views.
pub fn edge_loss(views: &[ExplanationView]) -> f64 {
    let (mut covered, mut total) = (0, 0);
    for v in views {
        let c = CoverageReport::of(&v.patterns, &v.subgraphs);
        covered += c.edges_covered;
        total += c.edges_total;
    }
    if total == 0 {
        0.0
    } else {
        100.0 * (total - covered) as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub graph: GraphId,
    pub label: ClassLabel,
    pub nodes: usize,
    pub fidelity_plus: f64,
    /// Absent for an empty explanation.
    pub fidelity_minus: Option<f64>,
    pub sparsity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    pub sparsity: f64,
    pub compression: f64,
    pub edge_loss_pct: f64,
    pub per_graph: Vec<GraphMetrics>,
    /// Graphs of the database that no view explains; left out of the averages.
    pub unexplained: Vec<GraphId>,
    /// Explained graphs with an empty node set; left out of the Fidelity- average.
    pub empty_explanations: Vec<GraphId>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluates `views` against their source graphs in `db`.
///
/// Per-graph terms run on the current rayon pool; averages are summed in
/// graph order, so the report does not depend on the number of workers.
/// Averages over an empty set are 0.
pub fn evaluate(
    db: &GraphDatabase,
    views: &[ExplanationView],
    m: &GcnModel,
) -> Result<MetricsReport, ModelError> {
    let mut jobs: Vec<(GraphId, ClassLabel, &NodeSet)> = views
        .iter()
        .flat_map(|v| v.subgraphs.iter().map(move |s| (s.source, v.label, &s.nodes)))
        .collect();
    jobs.sort_by_key(|&(g, l, _)| (g, l));
    let per_graph: Vec<GraphMetrics> = jobs
        .par_iter()
        .map(|&(id, label, nodes)| {
            let g = db.graph(id);
            Ok(GraphMetrics {
                graph: id,
                label,
                nodes: nodes.len(),
                fidelity_plus: graph_fidelity_plus(m, g, nodes, label)?,
                fidelity_minus: graph_fidelity_minus(m, g, nodes, label)?,
                sparsity: graph_sparsity(g, nodes),
            })
        })
        .collect::<Result<_, ModelError>>()?;
    let explained: BTreeSet<GraphId> = per_graph.iter().map(|r| r.graph).collect();
    Ok(MetricsReport {
        fidelity_plus: mean(per_graph.iter().map(|r| r.fidelity_plus)),
        fidelity_minus: mean(per_graph.iter().filter_map(|r| r.fidelity_minus)),
        sparsity: mean(per_graph.iter().map(|r| r.sparsity)),
        compression: compression(views),
        edge_loss_pct: edge_loss(views),
        unexplained: (0..db.len()).filter(|g| !explained.contains(g)).collect(),
        empty_explanations: per_graph.iter().filter(|r| r.nodes == 0).map(|r| r.graph).collect(),
        per_graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::ExplanationSubgraph;
    use crate::gnn::softmax;
    use crate::graph::Pattern;
    use ndarray::{arr1, arr2};

    fn triangle(dim: usize) -> Graph {
        Graph::from_parts(dim, (0..3).map(|_| (0, vec![1.0; dim])), [(0, 1, 0), (1, 2, 0), (0, 2, 0)])
            .unwrap()
    }

    fn key_model() -> GcnModel {
        GcnModel::new(vec![arr2(&[[1.0]])], arr2(&[[10.0, 0.0]]), arr1(&[0.0, 0.5])).unwrap()
    }

    fn view(label: ClassLabel, patterns: Vec<Pattern>, subs: Vec<(GraphId, &Graph, NodeSet)>) -> ExplanationView {
        let subgraphs = subs
            .into_iter()
            .map(|(id, g, nodes)| ExplanationSubgraph::new(id, label, g, nodes))
            .collect();
        ExplanationView::new(label, patterns, subgraphs)
    }

    #[test]
    fn fidelity_edge_cases() {
        let m = key_model();
        let g = triangle(1);
        let all: NodeSet = (0..3).collect();
        assert_eq!(graph_fidelity_plus(&m, &g, &NodeSet::new(), 0).unwrap(), 0.0);
        assert_eq!(graph_fidelity_minus(&m, &g, &NodeSet::new(), 0).unwrap(), None);
        assert_eq!(graph_fidelity_minus(&m, &g, &all, 0).unwrap(), Some(0.0));
        let empty_prob = softmax(&arr1(&[0.0, 0.5]))[0];
        let full = label_probability(&m, &g, 0).unwrap();
        assert!((graph_fidelity_plus(&m, &g, &all, 0).unwrap() - (full - empty_prob)).abs() < 1e-15);
    }

    #[test]
    fn sparsity_edge_cases() {
        let g = triangle(1);
        assert_eq!(graph_sparsity(&g, &(0..3).collect()), 0.0);
        assert_eq!(graph_sparsity(&g, &NodeSet::new()), 1.0);
        // one node, no edges: 1 - 1/6
        assert!((graph_sparsity(&g, &[1].into()) - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn compression_arithmetic() {
        let g = triangle(1);
        let all: NodeSet = (0..3).collect();
        let tri = Pattern::from_graph(&g).unwrap();
        let one = view(0, vec![tri.clone()], vec![(0, &g, all.clone())]);
        assert_eq!(compression(std::slice::from_ref(&one)), 0.0);
        let two = view(0, vec![tri.clone()], vec![(0, &g, all.clone()), (1, &g, all.clone())]);
        assert_eq!(compression(std::slice::from_ref(&two)), 0.5);
        // the same pattern repeated in another view is not counted again
        let again = view(1, vec![tri], vec![]);
        assert_eq!(compression(&[two, again]), 0.5);
    }

    #[test]
    fn edge_loss_extremes() {
        let g = triangle(1);
        let all: NodeSet = (0..3).collect();
        let exact = view(0, vec![Pattern::from_graph(&g).unwrap()], vec![(0, &g, all.clone())]);
        assert_eq!(edge_loss(&[exact]), 0.0);
        let singles = view(0, vec![Pattern::singleton(0)], vec![(0, &g, all)]);
        assert_eq!(edge_loss(&[singles]), 100.0);
    }

    #[test]
    fn report_matches_per_graph_terms() {
        let m = key_model();
        let key = |k: usize| {
            Graph::from_parts(1, (0..3).map(|v| (0, vec![f64::from(u8::from(v == k))])), [(0, 1, 0), (1, 2, 0)])
                .unwrap()
        };
        let graphs = vec![key(0), key(2), key(1)];
        let db = GraphDatabase::new(graphs.clone(), vec![None; 3]);
        let v = view(
            0,
            vec![Pattern::singleton(0)],
            vec![(1, &graphs[1], [2].into()), (0, &graphs[0], NodeSet::new())],
        );
        let report = evaluate(&db, std::slice::from_ref(&v), &m).unwrap();
        assert_eq!(report.unexplained, vec![2]);
        assert_eq!(report.empty_explanations, vec![0]);
        assert_eq!(report.per_graph.iter().map(|r| r.graph).collect::<Vec<_>>(), vec![0, 1]);
        let fp1 = graph_fidelity_plus(&m, &graphs[1], &[2].into(), 0).unwrap();
        let fm1 = graph_fidelity_minus(&m, &graphs[1], &[2].into(), 0).unwrap().unwrap();
        assert!((report.fidelity_plus - fp1 / 2.0).abs() < 1e-15);
        assert!((report.fidelity_minus - fm1).abs() < 1e-15);
        assert!((report.sparsity - (1.0 + 1.0 - 1.0 / 5.0) / 2.0).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&report.sparsity));
        assert!(report.compression <= 1.0);
    }
}
